#pragma once

#include "mirank/core.hpp"

namespace mirank {

/// Extended features for a whole candidate set: column i is item i's
/// (local, global) vector of length 2d.
using ExtendedFeatures = Mat;

/// Value used for a global feature when every item shares the same local value.
inline constexpr double kDegenerateGlobalValue = 0.5;

/// Global feature extension.
///
/// For each dimension j the global value of item i is its min-max position
/// within the set, (x_ij - min_j) / (max_j - min_j). A dimension whose range is
/// zero maps to 0.5 for every item. Runs in O(N d).
inline ExtendedFeatures extend_features(const CandidateSet& set) {
  const auto n = static_cast<Eigen::Index>(set.size());
  const auto d = static_cast<Eigen::Index>(set.local_dim());
  ExtendedFeatures out(2 * d, n);
  if (n == 0) return out;

  Vec lo = set.items.front().local_features;
  Vec hi = lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec& x = set.items[static_cast<std::size_t>(i)].local_features;
    if (x.size() != d) throw DimensionError("item " + std::to_string(set.items[i].id) + ": feature dimension mismatch");
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec& x = set.items[static_cast<std::size_t>(i)].local_features;
    out.col(i).head(d) = x;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double range = hi[j] - lo[j];
      out(d + j, i) = range > 0.0 ? (x[j] - lo[j]) / range : kDegenerateGlobalValue;
    }
  }
  return out;
}

/// Local features only, same column layout (d x N). Used by the baseline model.
inline Mat local_feature_matrix(const CandidateSet& set) {
  const auto n = static_cast<Eigen::Index>(set.size());
  const auto d = static_cast<Eigen::Index>(set.local_dim());
  Mat out(d, n);
  for (Eigen::Index i = 0; i < n; ++i) out.col(i) = set.items[static_cast<std::size_t>(i)].local_features;
  return out;
}

}  // namespace mirank
