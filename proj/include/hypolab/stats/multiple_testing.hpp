#pragma once

#include <span>
#include <vector>

namespace hypolab::stats {

/// alpha / m.
double bonferroni_threshold(double alpha, std::size_t m);

/// Benjamini-Hochberg step-up at FDR level q: with sorted p_(1..m), find the
/// largest k with p_(k) <= k q / m and accept every p <= p_(k).
std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q);

}  // namespace hypolab::stats
