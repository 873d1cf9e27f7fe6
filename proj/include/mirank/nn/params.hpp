#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mirank/core.hpp"

namespace mirank::nn {

/// Non-owning view of one named parameter block (column-major storage).
struct BlockView {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

struct ConstBlockView {
  std::string name;
  const double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

/// Collects views over every block of a parameter container exposing
/// `visit(F)`, where F is called as f(name, block) with block a Mat or Vec.
template <class Params>
std::vector<BlockView> block_views(Params& params) {
  std::vector<BlockView> out;
  params.visit([&](std::string_view name, auto& block) {
    out.push_back(BlockView{std::string(name), block.data(), block.rows(), block.cols()});
  });
  return out;
}

template <class Params>
std::vector<ConstBlockView> block_views(const Params& params) {
  std::vector<ConstBlockView> out;
  params.visit([&](std::string_view name, const auto& block) {
    out.push_back(ConstBlockView{std::string(name), block.data(), block.rows(), block.cols()});
  });
  return out;
}

template <class Params>
void set_zero(Params& params) {
  params.visit([](std::string_view, auto& block) { block.setZero(); });
}

template <class Params>
bool all_finite(const Params& params) {
  bool ok = true;
  params.visit([&](std::string_view, const auto& block) { ok = ok && block.allFinite(); });
  return ok;
}

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
inline void glorot_uniform(Mat& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
}

/// Glorot bound for a vector used as a 1 x n (or n x 1) projection.
inline void glorot_uniform(Vec& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.size() + 1));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
}

inline void uniform_fill(Mat& w, double limit, Rng& rng) {
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace mirank::nn
