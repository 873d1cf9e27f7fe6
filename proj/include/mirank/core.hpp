#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mirank/errors.hpp"
#include "mirank/random.hpp"

namespace mirank {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ItemId = std::uint64_t;

/// One rankable item. `local_features` uses the same dimension d for every
/// item of a candidate set; d is run-time configuration (default 23).
struct Item {
  ItemId id = 0;
  double price = 1.0;
  Vec local_features;

  bool operator==(const Item& other) const {
    return id == other.id && price == other.price &&
           local_features.size() == other.local_features.size() &&
           local_features == other.local_features;
  }
};

struct CandidateSet {
  std::vector<Item> items;

  std::size_t size() const { return items.size(); }
  const Item& operator[](std::size_t i) const { return items[i]; }
  std::size_t local_dim() const { return items.empty() ? 0 : items.front().local_features.size(); }

  bool operator==(const CandidateSet&) const = default;
};

/// A display order over a candidate set.
///
/// `order[t]` is the 0-based index into `CandidateSet::items` of the item shown
/// at display position t + 1. Display positions are 1-based everywhere they are
/// surfaced (sequence states, attention rows, position embeddings); this vector
/// is the single place where the 0-based convention is used.
struct Ranking {
  std::vector<std::size_t> order;

  std::size_t size() const { return order.size(); }
  bool operator==(const Ranking&) const = default;

  static Ranking identity(std::size_t n) {
    Ranking r;
    r.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.order[i] = i;
    return r;
  }
};

/// One logged impression.
struct QueryRecord {
  std::int64_t query_id = 0;
  std::vector<Item> displayed;
  std::vector<int> labels;
  /// Simulator ground truth, when known.
  std::vector<double> ground_truth_probs;

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  }
  CandidateSet as_candidate_set() const { return CandidateSet{displayed}; }

  bool operator==(const QueryRecord&) const = default;
};

inline bool is_permutation_of(const Ranking& ranking, std::size_t n) {
  if (ranking.order.size() != n) return false;
  std::vector<std::size_t> sorted = ranking.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (sorted[i] != i) return false;
  }
  return true;
}

inline void validate_item(const Item& item, std::size_t expected_dim) {
  const std::string who = "item " + std::to_string(item.id);
  if (!std::isfinite(item.price)) throw ValidationError(who + ": non-finite price");
  if (item.price <= 0.0) throw ValidationError(who + ": non-positive price");
  if (static_cast<std::size_t>(item.local_features.size()) != expected_dim) {
    throw DimensionError(who + ": feature dimension " + std::to_string(item.local_features.size()) +
                         " != " + std::to_string(expected_dim));
  }
  if (!item.local_features.allFinite()) throw ValidationError(who + ": non-finite feature value");
}

/// Checks every CandidateSet/Item invariant and returns the set unchanged.
/// Errors name the offending item id.
inline const CandidateSet& validate_candidate_set(const CandidateSet& set) {
  if (set.items.empty()) throw ValidationError("candidate set is empty");
  const std::size_t d = set.local_dim();
  std::unordered_set<ItemId> seen;
  seen.reserve(set.size());
  for (const Item& item : set.items) {
    if (!seen.insert(item.id).second) {
      throw ValidationError("duplicate item id " + std::to_string(item.id));
    }
    validate_item(item, d);
  }
  return set;
}

inline void validate_ranking(const Ranking& ranking, std::size_t n) {
  if (!is_permutation_of(ranking, n)) {
    throw ValidationError("ranking is not a permutation of " + std::to_string(n) + " items");
  }
}

/// QueryRecord invariants; `require_purchase` enforces the training filter.
inline void validate_record(const QueryRecord& record, bool require_purchase) {
  const std::string who = "query " + std::to_string(record.query_id);
  if (record.labels.size() != record.displayed.size()) {
    throw ValidationError(who + ": labels length != displayed length");
  }
  if (!record.ground_truth_probs.empty() && record.ground_truth_probs.size() != record.displayed.size()) {
    throw ValidationError(who + ": ground_truth_probs length != displayed length");
  }
  for (int y : record.labels) {
    if (y != 0 && y != 1) throw ValidationError(who + ": labels must be 0/1");
  }
  validate_candidate_set(record.as_candidate_set());
  if (require_purchase && record.positives() == 0) {
    throw ValidationError(who + ": training record without a purchase");
  }
}

inline CandidateSet apply_ranking(const CandidateSet& set, const Ranking& ranking) {
  CandidateSet out;
  out.items.reserve(ranking.size());
  for (std::size_t idx : ranking.order) out.items.push_back(set.items[idx]);
  return out;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace mirank
