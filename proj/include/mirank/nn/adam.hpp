#pragma once

#include <cmath>
#include <vector>

#include "mirank/nn/params.hpp"

namespace mirank::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with per-block moment buffers. Block layout is fixed by the first call.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  template <class Params>
  void step(Params& params, const Params& grads) {
    auto p = block_views(params);
    auto g = block_views(grads);
    if (m_.empty()) {
      for (const auto& b : p) {
        m_.emplace_back(static_cast<std::size_t>(b.size()), 0.0);
        v_.emplace_back(static_cast<std::size_t>(b.size()), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const double lr = config_.learning_rate * std::sqrt(c2) / c1;
    const double eps = config_.epsilon * std::sqrt(c2);
    for (std::size_t b = 0; b < p.size(); ++b) {
      double* w = p[b].data;
      const double* d = g[b].data;
      auto& m = m_[b];
      auto& v = v_[b];
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * d[k];
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * d[k] * d[k];
        w[k] -= lr * m[k] / (std::sqrt(v[k]) + eps);
      }
    }
  }

  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace mirank::nn
