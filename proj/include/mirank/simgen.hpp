#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mirank/core.hpp"

namespace mirank {

/// Synthetic catalog parameters. Feature 0 is log(price); the remaining d - 1
/// features are standard normal draws standing in for relevance, CTR, CVR and
/// preference scores.
struct CatalogConfig {
  std::size_t n_items = 5000;
  std::size_t local_dim = 23;
  double price_min = 5.0;
  double price_max = 500.0;
  double quality_scale = 1.0;  // std-dev of the latent quality score
};

/// Linear read-outs of the local features that drive simulated behaviour.
/// Entry 0 (log price) is zero in both, and the two are orthogonal.
struct LatentWeights {
  Vec quality;   // purchase propensity
  Vec affinity;  // premium affinity: > 0 favours a pricey context, < 0 a cheap one
};

struct Catalog {
  std::vector<Item> items;  // sorted by ascending price, ids 0..n-1 in that order
  LatentWeights latent;

  double quality(const Item& item) const { return latent.quality.dot(item.local_features); }
  double affinity(const Item& item) const { return latent.affinity.dot(item.local_features); }
};

inline Catalog generate_catalog(const CatalogConfig& config, RngSeed seed) {
  if (config.n_items < 1) throw ValidationError("catalog needs at least one item");
  if (config.local_dim < 1) throw ValidationError("local_dim must be >= 1");
  if (!(config.price_min > 0.0) || !(config.price_max >= config.price_min)) {
    throw ValidationError("invalid price range");
  }
  Rng rng(seed);
  Rng weight_rng = rng.fork(1);
  Rng item_rng = rng.fork(2);
  const auto d = static_cast<Eigen::Index>(config.local_dim);

  Catalog catalog;
  Vec& q = catalog.latent.quality;
  Vec& a = catalog.latent.affinity;
  q = Vec::Zero(d);
  a = Vec::Zero(d);
  for (Eigen::Index j = 1; j < d; ++j) q[j] = weight_rng.normal();
  for (Eigen::Index j = 1; j < d; ++j) a[j] = weight_rng.normal();
  const double qn = q.norm();
  if (qn > 0.0) {
    q /= qn;
    a -= a.dot(q) * q;
  }
  // Features are standard normal, so unit-norm weights give unit-variance scores.
  if (const double an = a.norm(); an > 0.0) a /= an;
  q *= config.quality_scale;

  std::vector<double> prices(config.n_items);
  const double lo = std::log(config.price_min), hi = std::log(config.price_max);
  for (double& p : prices) p = std::exp(item_rng.uniform(lo, hi));
  std::sort(prices.begin(), prices.end());
  catalog.items.reserve(config.n_items);
  for (std::size_t i = 0; i < config.n_items; ++i) {
    Item item;
    item.id = i;
    item.price = prices[i];
    item.local_features.resize(d);
    item.local_features[0] = std::log(prices[i]);
    for (Eigen::Index j = 1; j < d; ++j) item.local_features[j] = item_rng.normal();
    catalog.items.push_back(std::move(item));
  }
  return catalog;
}

inline Catalog generate_catalog(std::size_t n_items, std::size_t local_dim, RngSeed seed) {
  CatalogConfig config;
  config.n_items = n_items;
  config.local_dim = local_dim;
  return generate_catalog(config, seed);
}

/// Synthetic user behaviour. With rel the min-max position of log(price)
/// within the displayed list (0.5 when all prices are equal), q the quality
/// and a the premium affinity of an item, the purchase logit at display
/// position t (1-based) is
///
///   logit(base_rate) + q_t
///     - price_sensitivity      * (rel_t - 0.5)
///     - position_bias_strength * ln t
///     + order_effect_strength  * (mean_{s<t} rel_s      - 0.5) * a_t   for t >= 2
///     + primacy_strength       * (mean(rel_1, rel_2)    - 0.5) * a_t   for t >= 3
///
/// The first term pair is a set-level effect: an item looks cheap among
/// pricier neighbours. The last two make the price level of what was shown
/// above (all predecessors, or just the top two) favour premium-leaning or
/// budget-leaning items.
struct BehaviorConfig {
  double price_sensitivity = 2.0;
  double position_bias_strength = 0.3;
  double order_effect_strength = 2.0;
  double primacy_strength = 2.0;
  double base_rate = 0.06;
  RngSeed seed{0};

  void validate() const {
    if (!(base_rate > 0.0 && base_rate < 1.0)) throw ValidationError("base_rate must lie in (0, 1)");
    for (double s : {price_sensitivity, position_bias_strength, order_effect_strength, primacy_strength}) {
      if (!std::isfinite(s)) throw ValidationError("behaviour strengths must be finite");
    }
  }

  /// Every influence strength zero, including position bias by default, so
  /// ground truth depends on the displayed set only. A non-zero
  /// `position_bias` keeps the order relevant through positions alone.
  static BehaviorConfig no_influence(double base_rate = 0.06, double position_bias = 0.0) {
    BehaviorConfig c;
    c.price_sensitivity = c.order_effect_strength = c.primacy_strength = 0.0;
    c.position_bias_strength = position_bias;
    c.base_rate = base_rate;
    return c;
  }
};

/// Min-max position of log(price) of each displayed item.
inline std::vector<double> relative_log_prices(const std::vector<Item>& displayed) {
  std::vector<double> rel(displayed.size(), 0.5);
  if (displayed.empty()) return rel;
  double lo = std::log(displayed.front().price), hi = lo;
  for (const Item& it : displayed) {
    lo = std::min(lo, std::log(it.price));
    hi = std::max(hi, std::log(it.price));
  }
  if (hi > lo) {
    for (std::size_t t = 0; t < displayed.size(); ++t) rel[t] = (std::log(displayed[t].price) - lo) / (hi - lo);
  }
  return rel;
}

/// Ground-truth purchase probability of every displayed position.
inline std::vector<double> ground_truth_probabilities(const BehaviorConfig& config, const LatentWeights& latent,
                                                      const std::vector<Item>& displayed) {
  config.validate();
  const std::vector<double> rel = relative_log_prices(displayed);
  const double base = std::log(config.base_rate / (1.0 - config.base_rate));
  std::vector<double> probs(displayed.size());
  double prefix_sum = 0.0;
  for (std::size_t t = 0; t < displayed.size(); ++t) {
    const Vec& f = displayed[t].local_features;
    const double affinity = latent.affinity.dot(f);
    double z = base + latent.quality.dot(f);
    z -= config.price_sensitivity * (rel[t] - 0.5);
    z -= config.position_bias_strength * std::log(static_cast<double>(t + 1));
    if (t >= 1) z += config.order_effect_strength * (prefix_sum / static_cast<double>(t) - 0.5) * affinity;
    if (t >= 2) z += config.primacy_strength * (0.5 * (rel[0] + rel[1]) - 0.5) * affinity;
    probs[t] = sigmoid(z);
    prefix_sum += rel[t];
  }
  return probs;
}

struct SessionOutcome {
  std::vector<int> labels;
  std::vector<double> ground_truth;
};

/// Independent Bernoulli purchase per displayed item (quantity 1).
inline SessionOutcome simulate_session(const BehaviorConfig& config, const LatentWeights& latent,
                                       const std::vector<Item>& displayed, Rng& rng) {
  SessionOutcome out;
  out.ground_truth = ground_truth_probabilities(config, latent, displayed);
  out.labels.reserve(displayed.size());
  for (double p : out.ground_truth) out.labels.push_back(rng.bernoulli(p) ? 1 : 0);
  return out;
}

// ---------------------------------------------------------------------------

/// Orders a sampled candidate set for display.
using RankingPolicy = std::function<Ranking(const CandidateSet&, Rng&)>;

inline Ranking random_policy(const CandidateSet& set, Rng& rng) {
  Ranking r = Ranking::identity(set.size());
  rng.shuffle(r.order);
  return r;
}

struct LogConfig {
  std::size_t train_queries = 2000;
  std::size_t test_queries = 500;
  std::size_t items_per_query = 50;
  /// Candidates are drawn from a window of items_per_query * pool_factor
  /// price-adjacent catalog items, so a query covers a narrow price band.
  std::size_t pool_factor = 3;
  bool filter_train = true;
};

struct GenerationSnapshot {
  CatalogConfig catalog;
  BehaviorConfig behavior;
  LogConfig logs;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::string split;
  std::vector<QueryRecord> records;
  std::optional<GenerationSnapshot> generation;

  bool operator==(const Dataset& other) const { return split == other.split && records == other.records; }
};

struct GeneratedLogs {
  Dataset train;
  Dataset test;
  std::size_t train_generated = 0;
  double acceptance_rate = 1.0;  // fraction of train queries passing the purchase filter
};

/// Candidate set for one query: a random price window of the catalog,
/// subsampled without replacement, in catalog order.
inline CandidateSet sample_candidate_set(const Catalog& catalog, std::size_t items, std::size_t pool_factor,
                                         Rng& rng) {
  const std::size_t n = catalog.items.size();
  if (items < 1 || items > n) throw ValidationError("items_per_query must be in [1, catalog size]");
  const std::size_t pool = std::min(n, std::max(items, items * std::max<std::size_t>(pool_factor, 1)));
  const std::size_t start = rng.index(n - pool + 1);
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), start);
  rng.shuffle(idx);
  idx.resize(items);
  std::sort(idx.begin(), idx.end());
  CandidateSet set;
  set.items.reserve(items);
  for (std::size_t i : idx) set.items.push_back(catalog.items[i]);
  return set;
}

inline GeneratedLogs generate_logs(const BehaviorConfig& behavior, const Catalog& catalog, const LogConfig& config,
                                   RngSeed seed, const RankingPolicy& policy = random_policy) {
  behavior.validate();
  if (config.items_per_query > catalog.items.size()) {
    throw ValidationError("items_per_query exceeds catalog size");
  }
  Rng rng(seed);
  GeneratedLogs out;
  out.train.split = "train";
  out.test.split = "test";
  auto make = [&](std::int64_t qid, Rng& query_rng) {
    const CandidateSet set = sample_candidate_set(catalog, config.items_per_query, config.pool_factor, query_rng);
    const Ranking order = policy(set, query_rng);
    QueryRecord rec;
    rec.query_id = qid;
    rec.displayed = apply_ranking(set, order).items;
    SessionOutcome s = simulate_session(behavior, catalog.latent, rec.displayed, query_rng);
    rec.labels = std::move(s.labels);
    rec.ground_truth_probs = std::move(s.ground_truth);
    return rec;
  };
  std::int64_t qid = 0;
  for (std::size_t q = 0; q < config.train_queries; ++q, ++qid) {
    Rng query_rng = rng.fork(static_cast<std::uint64_t>(qid));
    QueryRecord rec = make(qid, query_rng);
    ++out.train_generated;
    if (config.filter_train && rec.positives() == 0) continue;
    out.train.records.push_back(std::move(rec));
  }
  for (std::size_t q = 0; q < config.test_queries; ++q, ++qid) {
    Rng query_rng = rng.fork(static_cast<std::uint64_t>(qid));
    out.test.records.push_back(make(qid, query_rng));
  }
  out.acceptance_rate = out.train_generated == 0
                            ? 1.0
                            : static_cast<double>(out.train.records.size()) / static_cast<double>(out.train_generated);
  if (config.train_queries > 0 && out.train.records.empty()) {
    throw ValidationError("purchase filter rejected every train record (acceptance rate 0)");
  }
  return out;
}

}  // namespace mirank
