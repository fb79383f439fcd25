#pragma once

#include <span>
#include <vector>

namespace hypolab::stats {

struct RankSummary {
  std::vector<double> ranks;  // 1-based midranks, input order
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

RankSummary midranks(std::span<const double> values);

}  // namespace hypolab::stats
