#pragma once

#include <cmath>
#include <utility>

#include "mirank/nn/params.hpp"

namespace mirank::nn {

/// Standard LSTM cell (no peepholes) plus the scalar output head
/// logit = w_output . h + b_output.
///
/// Gate rows are stacked as [input; forget; output; candidate], each block of
/// height H, in w_input (4H x in), w_recurrent (4H x H) and bias (4H).
struct LstmParams {
  Mat w_input;
  Mat w_recurrent;
  Vec bias;
  Vec w_output;
  Vec b_output;

  static constexpr double kForgetBiasInit = 1.0;

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size) {
    const auto in = static_cast<Eigen::Index>(input_size);
    const auto h = static_cast<Eigen::Index>(hidden_size);
    LstmParams p;
    p.w_input = Mat::Zero(4 * h, in);
    p.w_recurrent = Mat::Zero(4 * h, h);
    p.bias = Vec::Zero(4 * h);
    p.w_output = Vec::Zero(h);
    p.b_output = Vec::Zero(1);
    return p;
  }

  static LstmParams glorot(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
    LstmParams p = zeros(input_size, hidden_size);
    const auto h = static_cast<Eigen::Index>(hidden_size);
    // Fan sizes per gate, not for the stacked matrix.
    for (Eigen::Index g = 0; g < 4; ++g) {
      Mat wi(h, p.w_input.cols());
      glorot_uniform(wi, rng);
      p.w_input.middleRows(g * h, h) = wi;
      Mat wr(h, h);
      glorot_uniform(wr, rng);
      p.w_recurrent.middleRows(g * h, h) = wr;
    }
    p.bias.segment(h, h).setConstant(kForgetBiasInit);
    glorot_uniform(p.w_output, rng);
    return p;
  }

  Eigen::Index hidden_size() const { return w_recurrent.cols(); }
  Eigen::Index input_size() const { return w_input.cols(); }

  template <class F>
  void visit(F&& f) {
    f("lstm.w_input", w_input);
    f("lstm.w_recurrent", w_recurrent);
    f("lstm.bias", bias);
    f("out.w_hidden", w_output);
    f("out.bias", b_output);
  }
  template <class F>
  void visit(F&& f) const {
    f("lstm.w_input", w_input);
    f("lstm.w_recurrent", w_recurrent);
    f("lstm.bias", bias);
    f("out.w_hidden", w_output);
    f("out.bias", b_output);
  }
};

struct LstmState {
  Vec hidden;
  Vec cell;
};

/// Logistic function of every element. Large negative inputs give exp -> inf
/// and a result of exactly 0, so no branch is needed.
inline Eigen::ArrayXd logistic(const Eigen::ArrayXd& z) { return 1.0 / (1.0 + (-z).exp()); }

/// Gate nonlinearities [sigmoid(i), sigmoid(f), sigmoid(o), tanh(g)] in one
/// vectorised pass, using tanh(x) = 2 sigmoid(2x) - 1.
inline Eigen::ArrayXd gate_activations(const Vec& preact) {
  const Eigen::Index h = preact.size() / 4;
  Eigen::ArrayXd z = preact.array();
  z.tail(h) *= 2.0;
  Eigen::ArrayXd g = logistic(z);
  g.tail(h) = 2.0 * g.tail(h) - 1.0;
  return g;
}

inline Eigen::ArrayXd tanh_of(const Eigen::ArrayXd& x) { return 2.0 * logistic(2.0 * x) - 1.0; }

/// One recurrence step from precomputed gate pre-activations
/// (w_input x + bias + w_recurrent h).
inline LstmState lstm_activate(const Vec& preact, const Vec& cell) {
  const Eigen::Index h = cell.size();
  const Eigen::ArrayXd g = gate_activations(preact);
  LstmState out;
  out.cell = (g.segment(h, h) * cell.array() + g.head(h) * g.tail(h)).matrix();
  out.hidden = (g.segment(2 * h, h) * tanh_of(out.cell.array())).matrix();
  return out;
}

inline LstmState lstm_step(const LstmParams& params, const Vec& hidden, const Vec& cell,
                           const Eigen::Ref<const Vec>& x) {
  if (x.size() != params.input_size()) {
    throw DimensionError("lstm input size " + std::to_string(x.size()) + " != " +
                         std::to_string(params.input_size()));
  }
  if (hidden.size() != params.hidden_size() || cell.size() != params.hidden_size()) {
    throw DimensionError("lstm state size mismatch");
  }
  Vec preact = params.bias;
  preact.noalias() += params.w_input * x;
  preact.noalias() += params.w_recurrent * hidden;
  return lstm_activate(preact, cell);
}

/// Forward values kept for backpropagation through a whole sequence.
/// Column t of `hiddens`/`cells` is the state *after* step t; `prev_hiddens`
/// column t is the state before it (zero at t = 0).
struct LstmSequenceTape {
  Mat gates;  // activated gates, 4H x N
  Mat cells;
  Mat tanh_cells;
  Mat hiddens;
  Mat prev_hiddens;
};

/// Runs the cell over columns of `inputs` starting from the zero state.
inline void lstm_forward_sequence(const LstmParams& params, const Mat& inputs, LstmSequenceTape& tape) {
  const Eigen::Index h = params.hidden_size();
  const Eigen::Index n = inputs.cols();
  if (inputs.rows() != params.input_size()) throw DimensionError("lstm sequence input size mismatch");
  Mat pre = params.w_input * inputs;
  pre.colwise() += params.bias;
  tape.gates.resize(4 * h, n);
  tape.cells.resize(h, n);
  tape.tanh_cells.resize(h, n);
  tape.hiddens.resize(h, n);
  tape.prev_hiddens.resize(h, n);
  Vec hprev = Vec::Zero(h);
  Vec cprev = Vec::Zero(h);
  Vec z(4 * h);
  for (Eigen::Index t = 0; t < n; ++t) {
    z = pre.col(t);
    z.noalias() += params.w_recurrent * hprev;
    tape.prev_hiddens.col(t) = hprev;
    const Eigen::ArrayXd g = gate_activations(z);
    tape.gates.col(t) = g.matrix();
    cprev = (g.segment(h, h) * cprev.array() + g.head(h) * g.tail(h)).matrix();
    tape.cells.col(t) = cprev;
    const Eigen::ArrayXd tc = tanh_of(cprev.array());
    tape.tanh_cells.col(t) = tc.matrix();
    hprev = (g.segment(2 * h, h) * tc).matrix();
    tape.hiddens.col(t) = hprev;
  }
}

/// Backpropagation through time. `dhidden` (H x N) holds the gradient reaching
/// each h_t from outside the recurrence (output head, attention paths); the
/// recurrent contributions are added here. Accumulates into the LSTM blocks of
/// `grad` only; the output head is handled by the caller.
inline void lstm_backward_sequence(const LstmParams& params, const Mat& inputs, const LstmSequenceTape& tape,
                                   const Mat& dhidden, LstmParams& grad) {
  const Eigen::Index h = params.hidden_size();
  const Eigen::Index n = inputs.cols();
  Mat dpre(4 * h, n);
  Vec dh_next = Vec::Zero(h);
  Vec dc_next = Vec::Zero(h);
  for (Eigen::Index t = n; t-- > 0;) {
    for (Eigen::Index k = 0; k < h; ++k) {
      const double dh = dhidden(k, t) + dh_next[k];
      const double ig = tape.gates(k, t);
      const double fg = tape.gates(h + k, t);
      const double og = tape.gates(2 * h + k, t);
      const double cand = tape.gates(3 * h + k, t);
      const double tc = tape.tanh_cells(k, t);
      const double cprev = t > 0 ? tape.cells(k, t - 1) : 0.0;
      const double dc = dh * og * (1.0 - tc * tc) + dc_next[k];
      dpre(k, t) = dc * cand * ig * (1.0 - ig);
      dpre(h + k, t) = dc * cprev * fg * (1.0 - fg);
      dpre(2 * h + k, t) = dh * tc * og * (1.0 - og);
      dpre(3 * h + k, t) = dc * ig * (1.0 - cand * cand);
      dc_next[k] = dc * fg;
    }
    dh_next.noalias() = params.w_recurrent.transpose() * dpre.col(t);
  }
  grad.w_input.noalias() += dpre * inputs.transpose();
  grad.w_recurrent.noalias() += dpre * tape.prev_hiddens.transpose();
  grad.bias += dpre.rowwise().sum();
}

}  // namespace mirank::nn
