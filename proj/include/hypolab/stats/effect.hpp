#pragma once

#include <string_view>

#include "hypolab/stats/types.hpp"

namespace hypolab::stats {

enum class Magnitude { small, moderate, large };

std::string_view to_string(Magnitude m);

/// Ratio measures: < 1.35 small, up to 2.0 moderate, above large, using the
/// reciprocal below 1. Correlation-type measures on |value|: < 0.2 small,
/// up to 0.5 moderate. Cohen's d: < 0.5 small, up to 0.8 moderate.
Magnitude describe_effect(const EffectSize& effect);

}  // namespace hypolab::stats
