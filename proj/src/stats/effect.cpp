#include "hypolab/stats/effect.hpp"

#include <cmath>

namespace hypolab::stats {

std::string_view to_string(Magnitude m) {
  switch (m) {
    case Magnitude::small: return "small";
    case Magnitude::moderate: return "moderate";
    case Magnitude::large: return "large";
  }
  return "small";
}

namespace {
Magnitude banded(double v, double lo, double hi) {
  if (!(v >= lo)) return Magnitude::small;
  return v <= hi ? Magnitude::moderate : Magnitude::large;
}
}  // namespace

Magnitude describe_effect(const EffectSize& effect) {
  switch (effect.kind) {
    case EffectKind::odds_ratio:
    case EffectKind::relative_risk: {
      double v = effect.value;
      if (!(v > 0.0)) return Magnitude::large;  // zero ratio: maximal association
      if (v < 1.0) v = 1.0 / v;
      return banded(v, 1.35, 2.0);
    }
    case EffectKind::cohens_d: return banded(std::fabs(effect.value), 0.5, 0.8);
    case EffectKind::rank_biserial_r:
    case EffectKind::cramers_v:
    case EffectKind::pearson_r: return banded(std::fabs(effect.value), 0.2, 0.5);
  }
  return Magnitude::small;
}

}  // namespace hypolab::stats
