#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mirank/core.hpp"
#include "mirank/features.hpp"
#include "mirank/nn/attention.hpp"
#include "mirank/nn/loss.hpp"
#include "mirank/nn/lstm.hpp"
#include "mirank/nn/mlp.hpp"

namespace mirank {

enum class Variant { baseline, midnn, mirnn, mirnn_attention };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::midnn: return "miDNN";
    case Variant::mirnn: return "miRNN";
    case Variant::mirnn_attention: return "miRNN+attention";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view name) {
  if (name == "baseline" || name == "DNN") return Variant::baseline;
  if (name == "miDNN" || name == "midnn") return Variant::midnn;
  if (name == "miRNN" || name == "mirnn") return Variant::mirnn;
  if (name == "miRNN+attention" || name == "mirnn+attention" || name == "attention") return Variant::mirnn_attention;
  throw ValidationError("unknown model variant '" + std::string(name) + "'");
}

inline bool is_recurrent(Variant v) { return v == Variant::mirnn || v == Variant::mirnn_attention; }

/// Architecture sizes. local_dim is d; recurrent models and miDNN consume 2d.
struct ModelConfig {
  std::size_t local_dim = 23;
  std::vector<std::size_t> hidden_sizes{50, 50, 30};
  std::size_t lstm_hidden = 50;
  std::size_t rep_size = 10;
  std::size_t pos_size = 5;
  std::size_t max_positions = 100;

  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  Variant variant = Variant::midnn;
  ModelConfig config;
  nn::MlpParams mlp;
  nn::LstmParams lstm;
  nn::AttentionParams attention;

  std::size_t input_dim() const { return variant == Variant::baseline ? config.local_dim : 2 * config.local_dim; }

  static ModelParams zeros(Variant variant, const ModelConfig& config) {
    ModelParams p;
    p.variant = variant;
    p.config = config;
    const std::size_t in = p.input_dim();
    if (is_recurrent(variant)) {
      p.lstm = nn::LstmParams::zeros(in, config.lstm_hidden);
      if (variant == Variant::mirnn_attention) {
        p.attention = nn::AttentionParams::zeros(config.lstm_hidden, config.rep_size, config.pos_size,
                                                 config.max_positions);
      }
    } else {
      p.mlp = nn::MlpParams::zeros(in, config.hidden_sizes);
    }
    return p;
  }

  static ModelParams initialize(Variant variant, const ModelConfig& config, Rng& rng) {
    ModelParams p;
    p.variant = variant;
    p.config = config;
    const std::size_t in = p.input_dim();
    if (is_recurrent(variant)) {
      p.lstm = nn::LstmParams::glorot(in, config.lstm_hidden, rng);
      if (variant == Variant::mirnn_attention) {
        p.attention = nn::AttentionParams::glorot(config.lstm_hidden, config.rep_size, config.pos_size,
                                                  config.max_positions, rng);
      }
    } else {
      p.mlp = nn::MlpParams::glorot(in, config.hidden_sizes, rng);
    }
    return p;
  }

  /// Same shapes, all zero. Used as a gradient accumulator.
  ModelParams zeros_like() const { return zeros(variant, config); }

  template <class F>
  void visit(F&& f) {
    if (is_recurrent(variant)) {
      lstm.visit(f);
      if (variant == Variant::mirnn_attention) attention.visit(f);
    } else {
      mlp.visit(f);
    }
  }
  template <class F>
  void visit(F&& f) const {
    if (is_recurrent(variant)) {
      lstm.visit(f);
      if (variant == Variant::mirnn_attention) attention.visit(f);
    } else {
      mlp.visit(f);
    }
  }
};

inline bool same_parameters(const ModelParams& a, const ModelParams& b) {
  if (a.variant != b.variant || !(a.config == b.config)) return false;
  auto va = nn::block_views(a);
  auto vb = nn::block_views(b);
  if (va.size() != vb.size()) return false;
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].name != vb[i].name || va[i].rows != vb[i].rows || va[i].cols != vb[i].cols) return false;
    if (!std::equal(va[i].data, va[i].data + va[i].size(), vb[i].data)) return false;
  }
  return true;
}

inline void require_variant(const ModelParams& params, Variant v) {
  if (params.variant != v) {
    throw ValidationError("expected a " + std::string(to_string(v)) + " model, got " +
                          std::string(to_string(params.variant)));
  }
}

// ---------------------------------------------------------------------------
// Set-only models

/// p(i) from local features only.
inline double baseline_probability(const ModelParams& params, const Item& item) {
  require_variant(params, Variant::baseline);
  return nn::mlp_forward(params.mlp, item.local_features);
}

/// Baseline ranking score v^gamma * p(i).
inline double score_baseline(const ModelParams& params, const Item& item, double gamma) {
  return std::pow(item.price, gamma) * baseline_probability(params, item);
}

/// Purchase probability from one item's extended feature column.
inline double score_midnn(const ModelParams& params, const Eigen::Ref<const Vec>& extended) {
  require_variant(params, Variant::midnn);
  if (static_cast<std::size_t>(extended.size()) != params.input_dim()) {
    throw DimensionError("miDNN expects " + std::to_string(params.input_dim()) + " features, got " +
                         std::to_string(extended.size()));
  }
  return nn::mlp_forward(params.mlp, extended);
}

// ---------------------------------------------------------------------------
// Recurrent models

/// Persistent, immutable history shared between branching states.
struct HistoryNode {
  Vec hidden;
  Vec rep;  // empty for miRNN
  std::shared_ptr<const HistoryNode> parent;
};

/// Recurrent state before display position `position` (1-based).
/// hidden/cell are h_{position-1}; the history holds h_1.. and, for the
/// attention variant, a_1.. for every consumed position. Copies share history.
struct SequenceState {
  Vec hidden;
  Vec cell;
  std::shared_ptr<const HistoryNode> history;
  std::size_t position = 1;

  std::size_t history_length() const { return position - 1; }

  std::vector<Vec> hidden_history() const {
    std::vector<Vec> out(history_length());
    std::size_t i = out.size();
    for (const HistoryNode* n = history.get(); n != nullptr; n = n->parent.get()) out[--i] = n->hidden;
    return out;
  }
  std::vector<Vec> rep_cache() const {
    std::vector<Vec> out(history_length());
    std::size_t i = out.size();
    for (const HistoryNode* n = history.get(); n != nullptr; n = n->parent.get()) out[--i] = n->rep;
    return out;
  }
};

inline SequenceState initial_state(const ModelParams& params) {
  if (!is_recurrent(params.variant)) throw ValidationError("sequence state requires a recurrent model");
  const auto h = static_cast<Eigen::Index>(params.config.lstm_hidden);
  return SequenceState{Vec::Zero(h), Vec::Zero(h), nullptr, 1};
}

/// Work shared by every candidate extension of one state.
struct StepContext {
  Vec recurrent;  // w_recurrent * hidden
  std::vector<const Vec*> reps;
  std::vector<const Vec*> hiddens;
};

inline StepContext prepare_step(const ModelParams& params, const SequenceState& state) {
  StepContext ctx;
  ctx.recurrent.noalias() = params.lstm.w_recurrent * state.hidden;
  if (params.variant == Variant::mirnn_attention) {
    const std::size_t n = state.history_length();
    ctx.reps.resize(n);
    ctx.hiddens.resize(n);
    std::size_t i = n;
    for (const HistoryNode* node = state.history.get(); node != nullptr; node = node->parent.get()) {
      --i;
      ctx.reps[i] = &node->rep;
      ctx.hiddens[i] = &node->hidden;
    }
  }
  return ctx;
}

/// w_input x + bias for one item; reusable across every state.
inline Vec input_projection(const ModelParams& params, const Eigen::Ref<const Vec>& x) {
  if (static_cast<std::size_t>(x.size()) != params.input_dim()) {
    throw DimensionError("recurrent model expects " + std::to_string(params.input_dim()) + " features, got " +
                         std::to_string(x.size()));
  }
  Vec out = params.lstm.bias;
  out.noalias() += params.lstm.w_input * x;
  return out;
}

struct StepResult {
  double probability = 0.5;
  nn::LstmState lstm;
  Vec rep;
  Vec attention;  // weights over predecessors; empty at position 1 or for miRNN
};

inline StepResult step_from_projection(const ModelParams& params, const SequenceState& state,
                                       const StepContext& ctx, const Vec& projection) {
  StepResult r;
  Vec pre = projection + ctx.recurrent;
  r.lstm = nn::lstm_activate(pre, state.cell);
  double logit = params.lstm.w_output.dot(r.lstm.hidden) + params.lstm.b_output[0];
  if (params.variant == Variant::mirnn_attention) {
    r.rep = nn::make_item_representation(params.attention, state.position, r.lstm.hidden);
    if (!ctx.reps.empty()) {
      nn::AttentionOutput att = nn::attention_context(params.attention, ctx.reps, r.rep, ctx.hiddens);
      logit += params.attention.w_context.dot(att.context);
      r.attention = std::move(att.weights);
    }
  }
  r.probability = sigmoid(logit);
  return r;
}

/// State after consuming a step. `base` is not modified.
inline SequenceState commit_step(const SequenceState& base, StepResult&& step) {
  SequenceState next;
  next.hidden = step.lstm.hidden;
  next.cell = std::move(step.lstm.cell);
  next.history = std::make_shared<const HistoryNode>(HistoryNode{std::move(step.lstm.hidden), std::move(step.rep), base.history});
  next.position = base.position + 1;
  return next;
}

/// One display position: probability of the item with extended features `x`
/// at state.position, and the successor state.
inline std::pair<double, SequenceState> advance_sequence(const ModelParams& params, const SequenceState& state,
                                                         const Eigen::Ref<const Vec>& x) {
  if (!is_recurrent(params.variant)) throw ValidationError("advance_sequence requires a recurrent model");
  if (state.hidden.size() != static_cast<Eigen::Index>(params.config.lstm_hidden)) {
    throw ValidationError("sequence state does not match model");
  }
  StepContext ctx = prepare_step(params, state);
  StepResult r = step_from_projection(params, state, ctx, input_projection(params, x));
  const double p = r.probability;
  return {p, commit_step(state, std::move(r))};
}

// ---------------------------------------------------------------------------
// Whole-sequence passes used for training and evaluation

/// Per-position outputs of a full pass over one displayed sequence.
struct SequenceOutputs {
  std::vector<double> probabilities;
  /// attention[t] holds the weights of position t + 1 over its predecessors.
  std::vector<Vec> attention;
};

namespace detail {

inline double accumulate_loss(const std::vector<double>& probs, const std::vector<int>& labels) {
  double loss = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) loss += nn::cross_entropy(probs[t], labels[t]);
  return loss;
}

inline double mlp_pass(const ModelParams& params, const Mat& inputs, const std::vector<int>* labels,
                       ModelParams* grad, SequenceOutputs* out) {
  nn::MlpBatchTape tape;
  Eigen::RowVectorXd logits = nn::mlp_forward_batch(params.mlp, inputs, tape);
  std::vector<double> probs(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index t = 0; t < logits.size(); ++t) probs[static_cast<std::size_t>(t)] = sigmoid(logits[t]);
  double loss = 0.0;
  if (labels != nullptr) {
    loss = accumulate_loss(probs, *labels);
    if (grad != nullptr) {
      Eigen::RowVectorXd dlogits(logits.size());
      for (Eigen::Index t = 0; t < logits.size(); ++t) {
        dlogits[t] = probs[static_cast<std::size_t>(t)] - (*labels)[static_cast<std::size_t>(t)];
      }
      nn::mlp_backward_batch(params.mlp, tape, dlogits, grad->mlp);
    }
  }
  if (out != nullptr) out->probabilities = std::move(probs);
  return loss;
}

inline double recurrent_pass(const ModelParams& params, const Mat& inputs, const std::vector<int>* labels,
                             ModelParams* grad, SequenceOutputs* out) {
  const bool attend = params.variant == Variant::mirnn_attention;
  const Eigen::Index n = inputs.cols();
  const Eigen::Index h = params.lstm.hidden_size();
  nn::LstmSequenceTape tape;
  nn::lstm_forward_sequence(params.lstm, inputs, tape);
  const Mat& hs = tape.hiddens;

  Eigen::RowVectorXd logits = params.lstm.w_output.transpose() * hs;
  logits.array() += params.lstm.b_output[0];

  // Attention forward.
  const nn::AttentionParams& att = params.attention;
  const Eigen::Index a = attend ? att.rep_size() : 0;
  const Eigen::Index ps = attend ? att.pos_size() : 0;
  Mat rep_pre, reps, contexts;
  Eigen::RowVectorXd own, other;
  std::vector<Vec> scores_pre, alphas;
  if (attend) {
    rep_pre.resize(a, n);
    for (Eigen::Index t = 0; t < n; ++t) {
      rep_pre.col(t).noalias() = att.w_rep.leftCols(ps) * att.pos_embedding.col(att.embedding_column(t + 1));
      rep_pre.col(t).noalias() += att.w_rep.rightCols(h) * hs.col(t);
    }
    reps = rep_pre.cwiseMax(0.0);
    own = att.w_score.head(a).transpose() * reps;
    other = att.w_score.tail(a).transpose() * reps;
    contexts = Mat::Zero(h, n);
    scores_pre.resize(static_cast<std::size_t>(n));
    alphas.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 1; i < n; ++i) {
      Vec u(i), w(i);
      double top = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        u[j] = own[i] + other[j];
        w[j] = nn::relu(u[j]);
        top = std::max(top, w[j]);
      }
      w = (w.array() - top).exp();
      w /= w.sum();
      contexts.col(i).noalias() = hs.leftCols(i) * w;
      logits[i] += att.w_context.dot(contexts.col(i));
      scores_pre[static_cast<std::size_t>(i)] = std::move(u);
      alphas[static_cast<std::size_t>(i)] = std::move(w);
    }
  }

  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) probs[static_cast<std::size_t>(t)] = sigmoid(logits[t]);

  double loss = 0.0;
  if (labels != nullptr) loss = accumulate_loss(probs, *labels);

  if (grad != nullptr && labels != nullptr) {
    Eigen::RowVectorXd dlogit(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      dlogit[t] = probs[static_cast<std::size_t>(t)] - (*labels)[static_cast<std::size_t>(t)];
    }
    grad->lstm.w_output.noalias() += hs * dlogit.transpose();
    grad->lstm.b_output[0] += dlogit.sum();
    Mat dh = params.lstm.w_output * dlogit;  // H x N explicit gradients

    if (attend) {
      nn::AttentionParams& ga = grad->attention;
      ga.w_context.noalias() += contexts * dlogit.transpose();
      Eigen::RowVectorXd down = Eigen::RowVectorXd::Zero(n);
      Eigen::RowVectorXd dother = Eigen::RowVectorXd::Zero(n);
      for (Eigen::Index i = 1; i < n; ++i) {
        const Vec& w = alphas[static_cast<std::size_t>(i)];
        const Vec& u = scores_pre[static_cast<std::size_t>(i)];
        const Vec dc = dlogit[i] * att.w_context;
        Vec dalpha = hs.leftCols(i).transpose() * dc;
        dh.leftCols(i).noalias() += dc * w.transpose();
        const double mean = w.dot(dalpha);
        for (Eigen::Index j = 0; j < i; ++j) {
          if (u[j] <= 0.0) continue;
          const double du = w[j] * (dalpha[j] - mean);
          down[i] += du;
          dother[j] += du;
        }
      }
      ga.w_score.head(a).noalias() += reps * down.transpose();
      ga.w_score.tail(a).noalias() += reps * dother.transpose();
      Mat drep = att.w_score.head(a) * down + att.w_score.tail(a) * dother;  // A x N
      drep = (rep_pre.array() > 0.0).select(drep, 0.0);
      for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index col = att.embedding_column(t + 1);
        ga.w_rep.leftCols(ps).noalias() += drep.col(t) * att.pos_embedding.col(col).transpose();
        ga.pos_embedding.col(col).noalias() += att.w_rep.leftCols(ps).transpose() * drep.col(t);
      }
      ga.w_rep.rightCols(h).noalias() += drep * hs.transpose();
      dh.noalias() += att.w_rep.rightCols(h).transpose() * drep;
    }
    nn::lstm_backward_sequence(params.lstm, inputs, tape, dh, grad->lstm);
  }

  if (out != nullptr) {
    out->probabilities = std::move(probs);
    if (attend) out->attention = std::move(alphas);
  }
  return loss;
}

}  // namespace detail

/// Runs a model over the columns of `inputs` (an extended feature matrix in
/// display order; baseline models read only the first d rows). When `labels`
/// is given returns the summed cross-entropy, and when `grad` is also given
/// accumulates its gradient there.
inline double model_pass(const ModelParams& params, const Mat& inputs, const std::vector<int>* labels,
                         ModelParams* grad, SequenceOutputs* out) {
  const auto in = static_cast<Eigen::Index>(params.input_dim());
  if (params.variant == Variant::baseline) {
    if (inputs.rows() < in) throw DimensionError("baseline input has too few rows");
    return detail::mlp_pass(params, inputs.topRows(in), labels, grad, out);
  }
  if (inputs.rows() != in) {
    throw DimensionError("model expects " + std::to_string(in) + " feature rows, got " +
                         std::to_string(inputs.rows()));
  }
  if (params.variant == Variant::midnn) return detail::mlp_pass(params, inputs, labels, grad, out);
  return detail::recurrent_pass(params, inputs, labels, grad, out);
}

/// Probabilities for a logged display (record order), extending features over
/// the displayed set.
inline SequenceOutputs predict_display(const ModelParams& params, const CandidateSet& displayed) {
  SequenceOutputs out;
  model_pass(params, extend_features(displayed), nullptr, nullptr, &out);
  return out;
}

}  // namespace mirank
