#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirank/models.hpp"
#include "mirank/ranker.hpp"
#include "mirank/simgen.hpp"
#include "mirank/training.hpp"

namespace mirank {

// ---------------------------------------------------------------------------
// Metrics

namespace detail {

inline void require_two_classes(const std::vector<double>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw MetricError("predictions and labels differ in length");
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
    throw MetricError("metric needs at least one positive and one negative label");
  }
}

}  // namespace detail

/// Probability that a random positive scores above a random negative, ties
/// counted one half, via the rank-sum statistic.
inline double auc(const std::vector<double>& predictions, const std::vector<int>& labels) {
  detail::require_two_classes(predictions, labels);
  const std::size_t n = predictions.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && predictions[idx[j]] == predictions[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n - n_pos);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

/// 1 - mean cross-entropy / entropy of the empirical positive rate.
inline double rig(const std::vector<double>& predictions, const std::vector<int>& labels) {
  detail::require_two_classes(predictions, labels);
  double ce = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ce += nn::cross_entropy(predictions[i], labels[i]);
    n_pos += labels[i] == 1 ? 1 : 0;
  }
  ce /= static_cast<double>(labels.size());
  const double r = static_cast<double>(n_pos) / static_cast<double>(labels.size());
  const double entropy = -(r * std::log(r) + (1.0 - r) * std::log1p(-r));
  return 1.0 - ce / entropy;
}

struct MetricReport {
  std::string model;
  Variant variant = Variant::midnn;
  double auc = 0.5;
  double rig = 0.0;
  std::size_t samples = 0;
  std::size_t positives = 0;
  double positive_rate = 0.0;
};

/// Per-item predictions in logged display order, concatenated over records.
inline std::vector<double> predict_records(const ModelParams& model, const std::vector<QueryRecord>& records) {
  std::vector<double> out;
  for (const QueryRecord& r : records) {
    const SequenceOutputs o = predict_display(model, r.as_candidate_set());
    out.insert(out.end(), o.probabilities.begin(), o.probabilities.end());
  }
  return out;
}

inline std::vector<double> predict_records(const ModelParams& model, std::span<const PreparedRecord> records) {
  std::vector<double> out;
  for (const PreparedRecord& r : records) {
    SequenceOutputs o;
    model_pass(model, r.features, nullptr, nullptr, &o);
    out.insert(out.end(), o.probabilities.begin(), o.probabilities.end());
  }
  return out;
}

inline MetricReport make_report(std::string name, Variant variant, const std::vector<double>& predictions,
                                const std::vector<int>& labels) {
  MetricReport rep;
  rep.model = std::move(name);
  rep.variant = variant;
  rep.auc = auc(predictions, labels);
  rep.rig = rig(predictions, labels);
  rep.samples = labels.size();
  rep.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  rep.positive_rate = static_cast<double>(rep.positives) / static_cast<double>(rep.samples);
  return rep;
}

inline std::vector<int> concatenated_labels(const std::vector<QueryRecord>& records) {
  std::vector<int> out;
  for (const QueryRecord& r : records) out.insert(out.end(), r.labels.begin(), r.labels.end());
  return out;
}

inline MetricReport evaluate_model(const std::string& name, const ModelParams& model,
                                   const std::vector<QueryRecord>& records) {
  return make_report(name, model.variant, predict_records(model, records), concatenated_labels(records));
}

inline nlohmann::json to_json(const MetricReport& r) {
  return {{"model", r.model},         {"variant", std::string(to_string(r.variant))},
          {"auc", r.auc},             {"rig", r.rig},
          {"samples", r.samples},     {"positives", r.positives},
          {"positive_rate", r.positive_rate}};
}

// ---------------------------------------------------------------------------
// Policy comparison

struct Policy {
  std::string name;
  std::function<Ranking(const CandidateSet&)> rank;
};

struct PolicyStats {
  std::string name;
  double mean_gmv = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> per_query;
};

struct PairedDifference {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  bool significantly_positive() const { return ci_low > 0.0; }
  /// 95% interval contains zero (or the difference is exactly zero).
  bool within_noise() const { return (ci_low <= 0.0 && ci_high >= 0.0) || mean == 0.0; }
};

inline constexpr double kZ95 = 1.959963984540054;

namespace detail {

inline void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
  const double n = static_cast<double>(v.size());
  mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace detail

struct PolicyComparison {
  std::vector<PolicyStats> policies;

  const PolicyStats& find(const std::string& name) const {
    for (const auto& p : policies)
      if (p.name == name) return p;
    throw ValidationError("no policy named '" + name + "'");
  }

  /// Per-query paired difference a - b.
  PairedDifference difference(const std::string& a, const std::string& b) const {
    const PolicyStats& pa = find(a);
    const PolicyStats& pb = find(b);
    std::vector<double> d(pa.per_query.size());
    for (std::size_t q = 0; q < d.size(); ++q) d[q] = pa.per_query[q] - pb.per_query[q];
    PairedDifference out;
    detail::mean_and_se(d, out.mean, out.std_error);
    out.ci_low = out.mean - kZ95 * out.std_error;
    out.ci_high = out.mean + kZ95 * out.std_error;
    return out;
  }
};

struct ComparisonConfig {
  std::size_t queries = 500;
  std::size_t items_per_query = 50;
  std::size_t pool_factor = 3;
  /// Score with sampled purchases instead of ground-truth probabilities.
  bool sampled_labels = false;
};

/// Every policy ranks the same sampled candidate sets; each displayed order is
/// scored as sum of price x ground-truth purchase probability (or sampled
/// purchases when requested).
inline PolicyComparison compare_policies(const std::vector<Policy>& policies, const BehaviorConfig& behavior,
                                         const Catalog& catalog, const ComparisonConfig& config, RngSeed seed) {
  Rng rng(seed);
  PolicyComparison out;
  for (const Policy& p : policies) out.policies.push_back(PolicyStats{p.name, 0, 0, 0, 0, {}});
  for (std::size_t q = 0; q < config.queries; ++q) {
    Rng query_rng = rng.fork(q);
    const CandidateSet set = sample_candidate_set(catalog, config.items_per_query, config.pool_factor, query_rng);
    for (std::size_t k = 0; k < policies.size(); ++k) {
      const Ranking r = policies[k].rank(set);
      validate_ranking(r, set.size());
      const std::vector<Item> displayed = apply_ranking(set, r).items;
      const std::vector<double> gt = ground_truth_probabilities(behavior, catalog.latent, displayed);
      // Labels use a stream shared by all policies for this query.
      Rng label_rng = query_rng.fork(0x5eed);
      double gmv = 0.0;
      for (std::size_t t = 0; t < displayed.size(); ++t) {
        const double weight = config.sampled_labels ? (label_rng.bernoulli(gt[t]) ? 1.0 : 0.0) : gt[t];
        gmv += displayed[t].price * weight;
      }
      out.policies[k].per_query.push_back(gmv);
    }
  }
  for (PolicyStats& s : out.policies) {
    detail::mean_and_se(s.per_query, s.mean_gmv, s.std_error);
    s.ci_low = s.mean_gmv - kZ95 * s.std_error;
    s.ci_high = s.mean_gmv + kZ95 * s.std_error;
  }
  return out;
}

inline Policy model_policy(std::string name, const ModelParams& model, std::size_t beam_size = kDefaultBeamSize,
                           double gamma = 1.0) {
  return Policy{std::move(name), [&model, beam_size, gamma](const CandidateSet& set) {
                  return rank_with_model(model, set, beam_size, gamma).ranking;
                }};
}

/// Exhaustive search over the simulator's ground truth; sets of at most
/// kMaxOracleItems items.
inline Ranking ground_truth_oracle(const BehaviorConfig& behavior, const LatentWeights& latent,
                                   const CandidateSet& set) {
  const std::size_t n = set.size();
  if (n > kMaxOracleItems) throw ValidationError("ground-truth oracle limited to small sets");
  Ranking r = Ranking::identity(n);
  std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) { return set[a].id < set[b].id; });
  Ranking best = r;
  double best_value = -1.0;
  do {
    const std::vector<Item> displayed = apply_ranking(set, r).items;
    const std::vector<double> gt = ground_truth_probabilities(behavior, latent, displayed);
    double v = 0.0;
    for (std::size_t t = 0; t < n; ++t) v += displayed[t].price * gt[t];
    if (v > best_value) {
      best_value = v;
      best = r;
    }
  } while (std::next_permutation(r.order.begin(), r.order.end(),
                                 [&](std::size_t a, std::size_t b) { return set[a].id < set[b].id; }));
  return best;
}

inline nlohmann::json to_json(const PolicyComparison& c) {
  nlohmann::json out = nlohmann::json::array();
  for (const PolicyStats& s : c.policies) {
    out.push_back({{"policy", s.name},
                   {"mean_gmv", s.mean_gmv},
                   {"std_error", s.std_error},
                   {"ci_low", s.ci_low},
                   {"ci_high", s.ci_high},
                   {"queries", s.per_query.size()}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attention diagnostic

/// mean(i, j) for 1-based rows i = 2..L and columns j < i, stored 0-based.
struct AttentionMatrix {
  std::size_t length = 0;
  std::size_t records = 0;
  Mat mean;

  double at(std::size_t i, std::size_t j) const {
    return mean(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1));
  }
  double row_sum(std::size_t i) const { return mean.row(static_cast<Eigen::Index>(i - 1)).sum(); }
};

inline AttentionMatrix attention_diagnostic(const ModelParams& model, std::span<const PreparedRecord> records,
                                            std::size_t length = 20) {
  require_variant(model, Variant::mirnn_attention);
  if (length < 2) throw ValidationError("attention diagnostic needs length >= 2");
  AttentionMatrix out;
  out.length = length;
  const auto l = static_cast<Eigen::Index>(length);
  out.mean = Mat::Zero(l, l);
  for (const PreparedRecord& r : records) {
    if (static_cast<std::size_t>(r.features.cols()) < length) continue;
    SequenceOutputs o;
    model_pass(model, r.features, nullptr, nullptr, &o);
    for (Eigen::Index i = 1; i < l; ++i) {
      out.mean.row(i).head(i) += o.attention[static_cast<std::size_t>(i)].transpose();
    }
    ++out.records;
  }
  if (out.records == 0) {
    throw ValidationError("no record of length >= " + std::to_string(length) + " for the attention diagnostic");
  }
  out.mean /= static_cast<double>(out.records);
  return out;
}

inline AttentionMatrix attention_diagnostic(const ModelParams& model, const std::vector<QueryRecord>& records,
                                            std::size_t length = 20) {
  std::vector<PreparedRecord> prepared;
  for (const QueryRecord& r : records) {
    if (r.displayed.size() >= length) prepared.push_back(prepare_record(r));
  }
  return attention_diagnostic(model, std::span<const PreparedRecord>(prepared), length);
}

/// L x L grid, row i and column j (1-based headers); empty cells for j >= i.
inline void write_attention_csv(const AttentionMatrix& m, std::ostream& os) {
  os << "i";
  for (std::size_t j = 1; j <= m.length; ++j) os << ",j" << j;
  os << "\n";
  os.precision(17);
  for (std::size_t i = 1; i <= m.length; ++i) {
    os << i;
    for (std::size_t j = 1; j <= m.length; ++j) {
      os << ",";
      if (j < i) os << m.at(i, j);
    }
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Latency

struct LatencySample {
  std::string model;
  Variant variant = Variant::midnn;
  std::size_t rerank_size = 0;
  std::size_t beam_size = 0;
  double median_seconds = 0.0;
  std::size_t repetitions = 0;
};

struct SlopeFit {
  std::string model;
  std::string axis;   // "rerank_size" or "beam_size"
  std::size_t fixed = 0;  // the other axis' value
  double slope = 0.0;
};

struct LatencyProfile {
  std::vector<LatencySample> samples;
  std::vector<SlopeFit> slopes;

  const SlopeFit& slope(const std::string& model, const std::string& axis) const {
    for (const auto& s : slopes)
      if (s.model == model && s.axis == axis) return s;
    throw ValidationError("no slope for " + model + " / " + axis);
  }
};

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct BenchConfig {
  std::vector<std::size_t> rerank_sizes{10, 20, 40, 80};
  std::vector<std::size_t> beam_sizes{1, 2, 4, 8, 16};
  std::size_t fixed_beam = kDefaultBeamSize;
  std::size_t fixed_size = 40;
  std::size_t repetitions = 7;
  double min_seconds_per_repetition = 0.02;
  double gamma = 1.0;
};

struct NamedModel {
  std::string name;
  const ModelParams* model = nullptr;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Median per-call wall time of rerank_top_n over the full set.
inline double time_rerank(const ModelParams& model, const std::vector<CandidateSet>& sets, std::size_t beam,
                          const BenchConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const Ranking base = Ranking::identity(sets.front().size());
  volatile std::size_t sink = 0;
  sink = sink + rerank_top_n(sets.front(), base, model, base.size(), beam, cfg.gamma).order.front();  // warm-up
  std::vector<double> per_call;
  for (const CandidateSet& set : sets) {
    std::size_t calls = 0;
    const auto start = clock::now();
    double elapsed = 0.0;
    do {
      sink = sink + rerank_top_n(set, base, model, base.size(), beam, cfg.gamma).order.front();
      ++calls;
      elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < cfg.min_seconds_per_repetition);
    per_call.push_back(elapsed / static_cast<double>(calls));
  }
  return median(per_call);
}

}  // namespace detail

/// Wall time of reranking N items versus N (at fixed beam) and, for recurrent
/// models, versus beam size (at fixed N). Single-threaded by construction.
inline LatencyProfile latency_bench(const std::vector<NamedModel>& models, const BenchConfig& cfg, RngSeed seed) {
  LatencyProfile out;
  Rng rng(seed);
  auto sets_for = [&](std::size_t dim, std::size_t n, std::uint64_t stream) {
    Rng r = rng.fork(stream);
    const Catalog catalog = generate_catalog(std::max<std::size_t>(n * 5, 200), dim, RngSeed{r.next_u64()});
    std::vector<CandidateSet> sets;
    for (std::size_t k = 0; k < cfg.repetitions; ++k) sets.push_back(sample_candidate_set(catalog, n, 3, r));
    return sets;
  };
  for (const NamedModel& nm : models) {
    const ModelParams& m = *nm.model;
    std::vector<double> xs, ys;
    for (std::size_t n : cfg.rerank_sizes) {
      const auto sets = sets_for(m.config.local_dim, n, n);
      const double t = detail::time_rerank(m, sets, cfg.fixed_beam, cfg);
      out.samples.push_back({nm.name, m.variant, n, is_recurrent(m.variant) ? cfg.fixed_beam : 0, t, cfg.repetitions});
      xs.push_back(static_cast<double>(n));
      ys.push_back(t);
    }
    if (xs.size() >= 2) out.slopes.push_back({nm.name, "rerank_size", cfg.fixed_beam, log_log_slope(xs, ys)});
    if (!is_recurrent(m.variant)) continue;
    xs.clear();
    ys.clear();
    const auto sets = sets_for(m.config.local_dim, cfg.fixed_size, 1000003);
    for (std::size_t k : cfg.beam_sizes) {
      const double t = detail::time_rerank(m, sets, k, cfg);
      out.samples.push_back({nm.name, m.variant, cfg.fixed_size, k, t, cfg.repetitions});
      xs.push_back(static_cast<double>(k));
      ys.push_back(t);
    }
    if (xs.size() >= 2) out.slopes.push_back({nm.name, "beam_size", cfg.fixed_size, log_log_slope(xs, ys)});
  }
  return out;
}

inline void write_latency_csv(const LatencyProfile& p, std::ostream& os) {
  os << "model,variant,rerank_size,beam_size,median_seconds,repetitions\n";
  os.precision(9);
  for (const LatencySample& s : p.samples) {
    os << s.model << ',' << to_string(s.variant) << ',' << s.rerank_size << ',' << s.beam_size << ','
       << s.median_seconds << ',' << s.repetitions << '\n';
  }
}

inline nlohmann::json to_json(const LatencyProfile& p) {
  nlohmann::json samples = nlohmann::json::array(), slopes = nlohmann::json::array();
  for (const LatencySample& s : p.samples) {
    samples.push_back({{"model", s.model},
                       {"variant", std::string(to_string(s.variant))},
                       {"rerank_size", s.rerank_size},
                       {"beam_size", s.beam_size},
                       {"median_seconds", s.median_seconds},
                       {"repetitions", s.repetitions}});
  }
  for (const SlopeFit& s : p.slopes) {
    slopes.push_back({{"model", s.model}, {"axis", s.axis}, {"fixed", s.fixed}, {"slope", s.slope}});
  }
  return {{"samples", samples}, {"slopes", slopes}};
}

}  // namespace mirank
