#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mirank/features.hpp"
#include "mirank/models.hpp"

namespace mirank {

struct RankResult {
  Ranking ranking;
  double expected_gmv = 0.0;
  std::vector<double> per_position_probabilities;
};

inline constexpr std::size_t kDefaultBeamSize = 5;
inline constexpr std::size_t kMaxOracleItems = 8;

/// Model purchase probability of each item when displayed in `ranking`,
/// listed by display position.
inline std::vector<double> position_probabilities(const ModelParams& model, const CandidateSet& set,
                                                  const Ranking& ranking) {
  validate_ranking(ranking, set.size());
  std::vector<double> probs(ranking.size());
  if (model.variant == Variant::baseline) {
    for (std::size_t t = 0; t < ranking.size(); ++t) probs[t] = baseline_probability(model, set[ranking.order[t]]);
    return probs;
  }
  const ExtendedFeatures x = extend_features(set);
  if (model.variant == Variant::midnn) {
    for (std::size_t t = 0; t < ranking.size(); ++t) {
      probs[t] = score_midnn(model, x.col(static_cast<Eigen::Index>(ranking.order[t])));
    }
    return probs;
  }
  SequenceState state = initial_state(model);
  for (std::size_t t = 0; t < ranking.size(); ++t) {
    auto [p, next] = advance_sequence(model, state, x.col(static_cast<Eigen::Index>(ranking.order[t])));
    probs[t] = p;
    state = std::move(next);
  }
  return probs;
}

/// Sum over display positions of price x model probability.
inline double expected_gmv(const ModelParams& model, const CandidateSet& set, const Ranking& ranking) {
  const std::vector<double> probs = position_probabilities(model, set, ranking);
  double total = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) total += set[ranking.order[t]].price * probs[t];
  return total;
}

namespace detail {

/// Descending by score, ties by ascending item id.
inline Ranking sort_by_scores(const CandidateSet& set, const std::vector<double>& scores) {
  Ranking r = Ranking::identity(set.size());
  std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return set[a].id < set[b].id;
  });
  return r;
}

inline RankResult finish(const CandidateSet& set, Ranking ranking, const std::vector<double>& item_probs) {
  RankResult out{std::move(ranking), 0.0, {}};
  for (std::size_t idx : out.ranking.order) {
    out.per_position_probabilities.push_back(item_probs[idx]);
    out.expected_gmv += set[idx].price * item_probs[idx];
  }
  return out;
}

}  // namespace detail

/// miDNN ranking: descending v(i) p(i | S), optimal for any decreasing
/// position bias since p does not depend on the order.
inline RankResult rank_by_sort(const ModelParams& model, const CandidateSet& set) {
  require_variant(model, Variant::midnn);
  validate_candidate_set(set);
  const ExtendedFeatures x = extend_features(set);
  std::vector<double> probs(set.size()), scores(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    probs[i] = score_midnn(model, x.col(static_cast<Eigen::Index>(i)));
    scores[i] = set[i].price * probs[i];
  }
  return detail::finish(set, detail::sort_by_scores(set, scores), probs);
}

/// Baseline ranking: descending v(i)^gamma p(i) with local features only.
inline RankResult rank_by_baseline(const ModelParams& model, const CandidateSet& set, double gamma = 1.0) {
  require_variant(model, Variant::baseline);
  validate_candidate_set(set);
  std::vector<double> probs(set.size()), scores(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    probs[i] = baseline_probability(model, set[i]);
    scores[i] = std::pow(set[i].price, gamma) * probs[i];
  }
  return detail::finish(set, detail::sort_by_scores(set, scores), probs);
}

namespace detail {

struct BeamEntry {
  std::vector<std::size_t> sequence;  // indices into the candidate set
  SequenceState state;
  double expected_gmv = 0.0;
  std::vector<double> probabilities;
};

struct BeamCandidate {
  std::size_t parent = 0;
  std::size_t item = 0;
  double expected_gmv = 0.0;
};

/// Strict "better than" on (expected GMV desc, item-id sequence asc).
inline bool better(const BeamCandidate& a, const BeamCandidate& b, const std::vector<BeamEntry>& beam,
                   const CandidateSet& set) {
  if (a.expected_gmv != b.expected_gmv) return a.expected_gmv > b.expected_gmv;
  const auto& sa = beam[a.parent].sequence;
  const auto& sb = beam[b.parent].sequence;
  for (std::size_t t = 0; t < sa.size(); ++t) {
    if (sa[t] != sb[t]) return set[sa[t]].id < set[sb[t]].id;
  }
  return set[a.item].id < set[b.item].id;
}

inline void require_recurrent(const ModelParams& model) {
  if (!is_recurrent(model.variant)) {
    throw ValidationError("expected a recurrent model, got " + std::string(to_string(model.variant)));
  }
}

}  // namespace detail

/// Beam search over display orders.
///
/// Every step expands each of the (at most k) entries with every unused item,
/// scores each extension by its accumulated expected GMV and keeps the global
/// top-k, ties broken by lexicographic item-id sequence. Item input
/// projections are computed once per search and each entry's recurrent
/// product once per step, so a step costs O(k N) cell activations.
inline RankResult beam_search(const ModelParams& model, const CandidateSet& set, std::size_t beam_size) {
  detail::require_recurrent(model);
  validate_candidate_set(set);
  if (beam_size < 1) throw ValidationError("beam size must be >= 1");
  const std::size_t n = set.size();
  const ExtendedFeatures x = extend_features(set);
  std::vector<Vec> projections(n);
  for (std::size_t i = 0; i < n; ++i) projections[i] = input_projection(model, x.col(static_cast<Eigen::Index>(i)));

  std::vector<detail::BeamEntry> beam;
  beam.push_back(detail::BeamEntry{{}, initial_state(model), 0.0, {}});
  std::vector<detail::BeamCandidate> candidates;
  std::vector<StepContext> contexts;
  std::vector<char> used(n);

  for (std::size_t step = 0; step < n; ++step) {
    candidates.clear();
    contexts.clear();
    for (std::size_t e = 0; e < beam.size(); ++e) {
      const detail::BeamEntry& entry = beam[e];
      contexts.push_back(prepare_step(model, entry.state));
      std::fill(used.begin(), used.end(), 0);
      for (std::size_t idx : entry.sequence) used[idx] = 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        const StepResult r = step_from_projection(model, entry.state, contexts.back(), projections[i]);
        candidates.push_back({e, i, entry.expected_gmv + set[i].price * r.probability});
      }
    }
    const std::size_t keep = std::min(beam_size, candidates.size());
    auto cmp = [&](const detail::BeamCandidate& a, const detail::BeamCandidate& b) {
      return detail::better(a, b, beam, set);
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      cmp);

    std::vector<detail::BeamEntry> next;
    next.reserve(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      const detail::BeamCandidate& cand = candidates[c];
      const detail::BeamEntry& parent = beam[cand.parent];
      StepResult r = step_from_projection(model, parent.state, contexts[cand.parent], projections[cand.item]);
      detail::BeamEntry child;
      child.sequence = parent.sequence;
      child.sequence.push_back(cand.item);
      child.probabilities = parent.probabilities;
      child.probabilities.push_back(r.probability);
      child.expected_gmv = cand.expected_gmv;
      child.state = commit_step(parent.state, std::move(r));
      next.push_back(std::move(child));
    }
    beam = std::move(next);
  }
  detail::BeamEntry& best = beam.front();
  return RankResult{Ranking{std::move(best.sequence)}, best.expected_gmv, std::move(best.probabilities)};
}

/// Greedy selection: at each position take the unused item with the largest
/// v p given the prefix (ties by lower id). Reference for beam size 1.
inline RankResult greedy_rank(const ModelParams& model, const CandidateSet& set) {
  detail::require_recurrent(model);
  validate_candidate_set(set);
  const ExtendedFeatures x = extend_features(set);
  const std::size_t n = set.size();
  std::vector<char> used(n, 0);
  SequenceState state = initial_state(model);
  RankResult out;
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t best = n;
    double best_value = 0.0, best_p = 0.0;
    SequenceState best_state;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      auto [p, next] = advance_sequence(model, state, x.col(static_cast<Eigen::Index>(i)));
      const double value = set[i].price * p;
      if (best == n || value > best_value || (value == best_value && set[i].id < set[best].id)) {
        best = i;
        best_value = value;
        best_p = p;
        best_state = std::move(next);
      }
    }
    used[best] = 1;
    out.ranking.order.push_back(best);
    out.per_position_probabilities.push_back(best_p);
    out.expected_gmv += best_value;
    state = std::move(best_state);
  }
  return out;
}

/// Exact maximiser of expected GMV over all N! orders (N <= 8). Among equal
/// values the lexicographically smallest item-id sequence wins.
inline RankResult exhaustive_oracle(const ModelParams& model, const CandidateSet& set) {
  validate_candidate_set(set);
  const std::size_t n = set.size();
  if (n > kMaxOracleItems) {
    throw ValidationError("exhaustive oracle limited to " + std::to_string(kMaxOracleItems) + " items, got " +
                          std::to_string(n));
  }
  // Visit items in ascending id so the DFS enumerates id sequences in
  // lexicographic order; a strict improvement test then handles ties.
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return set[a].id < set[b].id; });

  RankResult best;
  bool have_best = false;
  std::vector<std::size_t> prefix;
  std::vector<double> probs;
  std::vector<char> used(n, 0);

  auto consider = [&](double value) {
    if (!have_best || value > best.expected_gmv) {
      best.ranking.order = prefix;
      best.per_position_probabilities = probs;
      best.expected_gmv = value;
      have_best = true;
    }
  };

  if (is_recurrent(model.variant)) {
    const ExtendedFeatures x = extend_features(set);
    auto dfs = [&](auto&& self, const SequenceState& state, double value) -> void {
      if (prefix.size() == n) {
        consider(value);
        return;
      }
      for (std::size_t i : by_id) {
        if (used[i]) continue;
        auto [p, next] = advance_sequence(model, state, x.col(static_cast<Eigen::Index>(i)));
        used[i] = 1;
        prefix.push_back(i);
        probs.push_back(p);
        self(self, next, value + set[i].price * p);
        probs.pop_back();
        prefix.pop_back();
        used[i] = 0;
      }
    };
    dfs(dfs, initial_state(model), 0.0);
  } else {
    const std::vector<double> item_probs = position_probabilities(model, set, Ranking::identity(n));
    auto dfs = [&](auto&& self, double value) -> void {
      if (prefix.size() == n) {
        consider(value);
        return;
      }
      for (std::size_t i : by_id) {
        if (used[i]) continue;
        used[i] = 1;
        prefix.push_back(i);
        probs.push_back(item_probs[i]);
        self(self, value + set[i].price * item_probs[i]);
        probs.pop_back();
        prefix.pop_back();
        used[i] = 0;
      }
    };
    dfs(dfs, 0.0);
  }
  return best;
}

/// Ranks a whole set with the natural ranker of the model variant.
inline RankResult rank_with_model(const ModelParams& model, const CandidateSet& set,
                                  std::size_t beam_size = kDefaultBeamSize, double gamma = 1.0) {
  switch (model.variant) {
    case Variant::baseline: return rank_by_baseline(model, set, gamma);
    case Variant::midnn: return rank_by_sort(model, set);
    default: return beam_search(model, set, beam_size);
  }
}

/// Reorders the first n items of `base` with `model`; the tail keeps its base
/// order. Global features of the reranked items are computed over the top-n
/// subset only. n larger than the set is treated as the full set.
inline Ranking rerank_top_n(const CandidateSet& set, const Ranking& base, const ModelParams& model, std::size_t n,
                            std::size_t beam_size = kDefaultBeamSize, double gamma = 1.0) {
  if (n < 1) throw ValidationError("rerank size must be >= 1");
  validate_ranking(base, set.size());
  n = std::min(n, set.size());
  CandidateSet head;
  head.items.reserve(n);
  for (std::size_t t = 0; t < n; ++t) head.items.push_back(set[base.order[t]]);
  const RankResult ranked = rank_with_model(model, head, beam_size, gamma);
  Ranking out;
  out.order.reserve(set.size());
  for (std::size_t idx : ranked.ranking.order) out.order.push_back(base.order[idx]);
  for (std::size_t t = n; t < set.size(); ++t) out.order.push_back(base.order[t]);
  return out;
}

}  // namespace mirank
