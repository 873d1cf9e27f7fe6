#pragma once

#include <string>
#include <vector>

#include "mirank/nn/params.hpp"

namespace mirank::nn {

/// Feed-forward network: ReLU hidden layers followed by a single sigmoid unit.
/// weights[l] is (out_l x in_l); the last layer has one output row.
struct MlpParams {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  static MlpParams zeros(std::size_t input_size, const std::vector<std::size_t>& hidden_sizes) {
    MlpParams p;
    std::size_t in = input_size;
    for (std::size_t h : hidden_sizes) {
      p.weights.push_back(Mat::Zero(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(in)));
      p.biases.push_back(Vec::Zero(static_cast<Eigen::Index>(h)));
      in = h;
    }
    p.weights.push_back(Mat::Zero(1, static_cast<Eigen::Index>(in)));
    p.biases.push_back(Vec::Zero(1));
    return p;
  }

  static MlpParams glorot(std::size_t input_size, const std::vector<std::size_t>& hidden_sizes, Rng& rng) {
    MlpParams p = zeros(input_size, hidden_sizes);
    for (Mat& w : p.weights) glorot_uniform(w, rng);
    return p;
  }

  std::size_t input_size() const { return weights.empty() ? 0 : static_cast<std::size_t>(weights.front().cols()); }
  std::size_t layers() const { return weights.size(); }

  template <class F>
  void visit(F&& f) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      f("mlp.w" + std::to_string(l), weights[l]);
      f("mlp.b" + std::to_string(l), biases[l]);
    }
  }
  template <class F>
  void visit(F&& f) const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      f("mlp.w" + std::to_string(l), weights[l]);
      f("mlp.b" + std::to_string(l), biases[l]);
    }
  }
};

inline void check_input(const MlpParams& params, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != params.input_size()) {
    throw DimensionError("mlp input size " + std::to_string(rows) + " != " + std::to_string(params.input_size()));
  }
}

inline double mlp_logit(const MlpParams& params, const Eigen::Ref<const Vec>& x) {
  check_input(params, x.size());
  Vec a = x;
  const std::size_t last = params.layers() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    a = (params.weights[l] * a + params.biases[l]).cwiseMax(0.0);
  }
  return (params.weights[last] * a)(0) + params.biases[last](0);
}

/// Purchase probability for one input vector; always strictly inside (0, 1)
/// for finite logits of moderate size.
inline double mlp_forward(const MlpParams& params, const Eigen::Ref<const Vec>& x) {
  return sigmoid(mlp_logit(params, x));
}

/// Post-activation values per layer for a column batch; activations[0] is the
/// input batch itself.
struct MlpBatchTape {
  std::vector<Mat> activations;
};

/// Logits for every column of `inputs`.
inline Eigen::RowVectorXd mlp_forward_batch(const MlpParams& params, const Mat& inputs, MlpBatchTape& tape) {
  check_input(params, inputs.rows());
  const std::size_t last = params.layers() - 1;
  tape.activations.resize(params.layers());
  tape.activations[0] = inputs;
  for (std::size_t l = 0; l < last; ++l) {
    Mat z = params.weights[l] * tape.activations[l];
    z.colwise() += params.biases[l];
    tape.activations[l + 1] = z.cwiseMax(0.0);
  }
  Eigen::RowVectorXd logits = params.weights[last] * tape.activations[last];
  logits.array() += params.biases[last](0);
  return logits;
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logit) per column.
inline void mlp_backward_batch(const MlpParams& params, const MlpBatchTape& tape,
                               const Eigen::RowVectorXd& dlogits, MlpParams& grad) {
  const std::size_t last = params.layers() - 1;
  Mat delta = dlogits;  // (out_l x batch)
  for (std::size_t l = last + 1; l-- > 0;) {
    grad.weights[l].noalias() += delta * tape.activations[l].transpose();
    grad.biases[l] += delta.rowwise().sum();
    if (l == 0) break;
    Mat back = params.weights[l].transpose() * delta;
    delta = (tape.activations[l].array() > 0.0).select(back, 0.0);
  }
}

}  // namespace mirank::nn
