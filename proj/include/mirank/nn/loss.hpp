#pragma once

#include <algorithm>
#include <cmath>

namespace mirank::nn {

inline constexpr double kProbabilityClamp = 1e-7;

inline double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

/// Binary cross-entropy in nats.
inline double cross_entropy(double prediction, int label) {
  const double p = clamp_probability(prediction);
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

}  // namespace mirank::nn
