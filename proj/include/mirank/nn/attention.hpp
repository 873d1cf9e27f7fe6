#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mirank/nn/params.hpp"

namespace mirank::nn {

/// Attention block over previous hidden vectors.
///
///   a_i    = ReLU(w_rep [pos_i; h_i])             (rep_size A)
///   g_ij   = ReLU(w_score [a_i; a_j])             (scalar)
///   alpha_i = softmax_j(g_ij), j < i
///   c_i    = sum_j alpha_ij h_j
///   logit  += w_context . c_i
///
/// pos_embedding has one column (size P) per display position
/// 1..max_positions; later positions reuse the last column.
struct AttentionParams {
  Vec w_context;      // H
  Vec w_score;        // 2A: first A entries multiply a_i, last A multiply a_j
  Mat w_rep;          // A x (P + H)
  Mat pos_embedding;  // P x max_positions

  static constexpr double kEmbeddingInit = 0.05;

  static AttentionParams zeros(std::size_t hidden_size, std::size_t rep_size, std::size_t pos_size,
                               std::size_t max_positions) {
    AttentionParams p;
    p.w_context = Vec::Zero(static_cast<Eigen::Index>(hidden_size));
    p.w_score = Vec::Zero(2 * static_cast<Eigen::Index>(rep_size));
    p.w_rep = Mat::Zero(static_cast<Eigen::Index>(rep_size), static_cast<Eigen::Index>(pos_size + hidden_size));
    p.pos_embedding = Mat::Zero(static_cast<Eigen::Index>(pos_size), static_cast<Eigen::Index>(max_positions));
    return p;
  }

  static AttentionParams glorot(std::size_t hidden_size, std::size_t rep_size, std::size_t pos_size,
                                std::size_t max_positions, Rng& rng) {
    AttentionParams p = zeros(hidden_size, rep_size, pos_size, max_positions);
    glorot_uniform(p.w_context, rng);
    glorot_uniform(p.w_score, rng);
    glorot_uniform(p.w_rep, rng);
    uniform_fill(p.pos_embedding, kEmbeddingInit, rng);
    return p;
  }

  Eigen::Index rep_size() const { return w_rep.rows(); }
  Eigen::Index pos_size() const { return pos_embedding.rows(); }
  Eigen::Index hidden_size() const { return w_context.size(); }
  std::size_t max_positions() const { return static_cast<std::size_t>(pos_embedding.cols()); }

  /// 0-based embedding column for a 1-based display position.
  Eigen::Index embedding_column(std::size_t position) const {
    return static_cast<Eigen::Index>(std::min(std::max<std::size_t>(position, 1), max_positions()) - 1);
  }

  template <class F>
  void visit(F&& f) {
    f("att.w_context", w_context);
    f("att.w_score", w_score);
    f("att.w_rep", w_rep);
    f("att.pos_embedding", pos_embedding);
  }
  template <class F>
  void visit(F&& f) const {
    f("att.w_context", w_context);
    f("att.w_score", w_score);
    f("att.w_rep", w_rep);
    f("att.pos_embedding", pos_embedding);
  }
};

/// a_i for the item at 1-based `position` with hidden vector `hidden`.
inline Vec make_item_representation(const AttentionParams& params, std::size_t position, const Vec& hidden) {
  if (hidden.size() != params.hidden_size()) throw DimensionError("attention hidden size mismatch");
  const Eigen::Index p = params.pos_size();
  Vec v = params.w_rep.leftCols(p) * params.pos_embedding.col(params.embedding_column(position));
  v.noalias() += params.w_rep.rightCols(params.hidden_size()) * hidden;
  return v.cwiseMax(0.0);
}

struct AttentionOutput {
  Vec context;
  Vec weights;
};

/// Context vector for position i from its predecessors' cached representations
/// and hidden vectors (both of length i - 1, in display order).
inline AttentionOutput attention_context(const AttentionParams& params, std::span<const Vec* const> reps,
                                         const Vec& rep_i, std::span<const Vec* const> hiddens) {
  if (reps.size() != hiddens.size()) throw ValidationError("attention history length mismatch");
  if (reps.empty()) throw ValidationError("attention needs at least one predecessor");
  const Eigen::Index a = params.rep_size();
  const double own = params.w_score.head(a).dot(rep_i);
  AttentionOutput out{Vec::Zero(params.hidden_size()), Vec(static_cast<Eigen::Index>(reps.size()))};
  double top = 0.0;  // scores are ReLU outputs, so >= 0
  for (std::size_t j = 0; j < reps.size(); ++j) {
    const double g = relu(own + params.w_score.tail(a).dot(*reps[j]));
    out.weights[static_cast<Eigen::Index>(j)] = g;
    top = std::max(top, g);
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < out.weights.size(); ++j) {
    out.weights[j] = std::exp(out.weights[j] - top);
    total += out.weights[j];
  }
  out.weights /= total;
  for (std::size_t j = 0; j < hiddens.size(); ++j) {
    out.context.noalias() += out.weights[static_cast<Eigen::Index>(j)] * *hiddens[j];
  }
  return out;
}

inline AttentionOutput attention_context(const AttentionParams& params, const std::vector<Vec>& reps,
                                         const Vec& rep_i, const std::vector<Vec>& hiddens) {
  std::vector<const Vec*> rp, hp;
  for (const Vec& r : reps) rp.push_back(&r);
  for (const Vec& h : hiddens) hp.push_back(&h);
  return attention_context(params, rp, rep_i, hp);
}

}  // namespace mirank::nn
