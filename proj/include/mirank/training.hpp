#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mirank/features.hpp"
#include "mirank/models.hpp"
#include "mirank/nn/adam.hpp"

namespace mirank {

/// A record with its extended features computed once.
struct PreparedRecord {
  Mat features;  // 2d x N, display order
  std::vector<int> labels;
};

inline PreparedRecord prepare_record(const QueryRecord& record) {
  return PreparedRecord{extend_features(record.as_candidate_set()), record.labels};
}

inline std::vector<PreparedRecord> prepare_records(const std::vector<QueryRecord>& records) {
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (const QueryRecord& r : records) out.push_back(prepare_record(r));
  return out;
}

struct Gradients {
  ModelParams grad;
  double loss = 0.0;  // summed cross-entropy
  std::size_t samples = 0;
};

/// Reverse-mode gradient of the summed cross-entropy over a batch of records.
/// Recurrent models backpropagate through each whole sequence.
inline Gradients backward(const ModelParams& params, std::span<const PreparedRecord> batch) {
  Gradients g{params.zeros_like(), 0.0, 0};
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double loss = model_pass(params, batch[b].features, &batch[b].labels, &g.grad, nullptr);
    if (!std::isfinite(loss)) throw NumericError("non-finite loss at batch index " + std::to_string(b));
    g.loss += loss;
    g.samples += batch[b].labels.size();
  }
  return g;
}

inline double total_loss(const ModelParams& params, std::span<const PreparedRecord> batch) {
  double loss = 0.0;
  for (const PreparedRecord& r : batch) loss += model_pass(params, r.features, &r.labels, nullptr, nullptr);
  return loss;
}

// ---------------------------------------------------------------------------

struct BlockError {
  std::string block;
  double max_relative_error = 0.0;
};

/// Largest analytic-vs-numeric relative error per parameter block, with
/// relative error |ga - gn| / max(|ga|, |gn|, 1e-8).
struct GradientReport {
  std::vector<BlockError> blocks;

  double worst() const {
    double w = 0.0;
    for (const auto& b : blocks) w = std::max(w, b.max_relative_error);
    return w;
  }
  bool passed(double tolerance = 1e-4) const { return worst() < tolerance; }
};

inline constexpr double kGradientCheckStep = 1e-5;
inline constexpr double kRelativeErrorFloor = 1e-8;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
}

/// Central differences on every parameter.
inline GradientReport gradient_check(const ModelParams& params, std::span<const PreparedRecord> batch,
                                     double step = kGradientCheckStep) {
  const Gradients analytic = backward(params, batch);
  ModelParams probe = params;
  auto views = nn::block_views(probe);
  auto grads = nn::block_views(analytic.grad);
  GradientReport report;
  for (std::size_t b = 0; b < views.size(); ++b) {
    BlockError err{views[b].name, 0.0};
    for (Eigen::Index k = 0; k < views[b].size(); ++k) {
      double& w = views[b].data[k];
      const double saved = w;
      w = saved + step;
      const double up = total_loss(probe, batch);
      w = saved - step;
      const double down = total_loss(probe, batch);
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      err.max_relative_error = std::max(err.max_relative_error, relative_error(grads[b].data[k], numeric));
    }
    report.blocks.push_back(err);
  }
  return report;
}

/// Small random model and batch for gradient checking.
struct GradientCheckInstance {
  ModelParams params;
  std::vector<PreparedRecord> batch;
};

inline GradientCheckInstance make_gradient_check_instance(Variant variant, RngSeed seed, std::size_t sequence_length = 4,
                                                          std::size_t local_dim = 3, std::size_t hidden = 6,
                                                          std::size_t records = 2) {
  Rng rng(seed);
  ModelConfig config;
  config.local_dim = local_dim;
  config.hidden_sizes = {hidden, hidden, std::max<std::size_t>(hidden / 2, 1)};
  config.lstm_hidden = hidden;
  config.rep_size = std::max<std::size_t>(hidden / 2, 2);
  config.pos_size = 3;
  config.max_positions = std::max<std::size_t>(sequence_length - 1, 1);  // exercises clamping
  GradientCheckInstance inst{ModelParams::initialize(variant, config, rng), {}};
  // Larger-than-default weights so ReLU units and attention scores are active.
  nn::AttentionParams& att = inst.params.attention;
  if (variant == Variant::mirnn_attention) {
    att.w_score *= 2.0;
    att.pos_embedding *= 10.0;
  }
  // Zero biases put a unit exactly on the ReLU kink whenever its whole input
  // layer is inactive; small random biases keep the point differentiable.
  for (Vec& b : inst.params.mlp.biases) {
    for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = rng.uniform(-0.1, 0.1);
  }
  for (std::size_t r = 0; r < records; ++r) {
    CandidateSet set;
    for (std::size_t i = 0; i < sequence_length; ++i) {
      Item item;
      item.id = i;
      item.price = rng.uniform(1.0, 10.0);
      item.local_features.resize(static_cast<Eigen::Index>(local_dim));
      for (Eigen::Index j = 0; j < item.local_features.size(); ++j) item.local_features[j] = rng.normal();
      set.items.push_back(std::move(item));
    }
    PreparedRecord rec{extend_features(set), {}};
    for (std::size_t i = 0; i < sequence_length; ++i) rec.labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    inst.batch.push_back(std::move(rec));
  }
  return inst;
}

inline GradientReport gradient_check(Variant variant, RngSeed seed, std::size_t sequence_length = 4) {
  GradientCheckInstance inst = make_gradient_check_instance(variant, seed, sequence_length);
  return gradient_check(inst.params, inst.batch);
}

// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_sequences = 16;  // recurrent models
  std::size_t batch_items = 256;     // baseline / miDNN
  nn::AdamConfig adam;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean per-sample cross-entropy of each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Mini-batch Adam training. Batches are whole sequences for recurrent models
/// and items pooled across records otherwise. Deterministic for a fixed seed.
inline TrainResult train(Variant variant, const ModelConfig& config, std::span<const PreparedRecord> records,
                         const TrainConfig& tc, RngSeed seed, const EpochCallback& on_epoch = {}) {
  if (records.empty()) throw ValidationError("training set is empty");
  for (const PreparedRecord& r : records) {
    if (static_cast<std::size_t>(r.features.rows()) != 2 * config.local_dim) {
      throw DimensionError("training record feature rows != 2 * local_dim");
    }
    if (r.labels.size() != static_cast<std::size_t>(r.features.cols())) {
      throw ValidationError("training record labels length mismatch");
    }
  }
  Rng rng(seed);
  Rng init_rng = rng.fork(1);
  Rng order_rng = rng.fork(2);
  TrainResult result{ModelParams::initialize(variant, config, init_rng), {}};
  ModelParams& params = result.params;
  nn::Adam adam(tc.adam);

  auto check_step = [&](double loss, std::size_t epoch, std::size_t step) {
    if (!std::isfinite(loss) || !nn::all_finite(params)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                         std::to_string(step));
    }
  };

  if (is_recurrent(variant)) {
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t bs = std::max<std::size_t>(tc.batch_sequences, 1);
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
      order_rng.shuffle(order);
      double epoch_loss = 0.0;
      std::size_t samples = 0, step = 0;
      for (std::size_t start = 0; start < order.size(); start += bs, ++step) {
        ModelParams grad = params.zeros_like();
        double loss = 0.0;
        for (std::size_t k = start; k < std::min(start + bs, order.size()); ++k) {
          const PreparedRecord& r = records[order[k]];
          loss += model_pass(params, r.features, &r.labels, &grad, nullptr);
          samples += r.labels.size();
        }
        adam.step(params, grad);
        check_step(loss, epoch, step);
        epoch_loss += loss;
      }
      result.epoch_loss.push_back(epoch_loss / static_cast<double>(samples));
      if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
    }
    return result;
  }

  // Item-level batches.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> items;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (Eigen::Index c = 0; c < records[r].features.cols(); ++c) {
      items.emplace_back(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c));
    }
  }
  const auto in = static_cast<Eigen::Index>(params.input_dim());
  const std::size_t bs = std::max<std::size_t>(tc.batch_items, 1);
  Mat batch(in, static_cast<Eigen::Index>(bs));
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    order_rng.shuffle(items);
    double epoch_loss = 0.0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < items.size(); start += bs, ++step) {
      const std::size_t count = std::min(bs, items.size() - start);
      batch.resize(in, static_cast<Eigen::Index>(count));
      labels.resize(count);
      for (std::size_t k = 0; k < count; ++k) {
        const auto [r, c] = items[start + k];
        batch.col(static_cast<Eigen::Index>(k)) = records[r].features.col(c).head(in);
        labels[k] = records[r].labels[c];
      }
      ModelParams grad = params.zeros_like();
      const double loss = model_pass(params, batch, &labels, &grad, nullptr);
      adam.step(params, grad);
      check_step(loss, epoch, step);
      epoch_loss += loss;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(items.size()));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  return result;
}

inline TrainResult train(Variant variant, const ModelConfig& config, const std::vector<QueryRecord>& records,
                         const TrainConfig& tc, RngSeed seed, const EpochCallback& on_epoch = {}) {
  for (const QueryRecord& r : records) validate_record(r, true);
  const std::vector<PreparedRecord> prepared = prepare_records(records);
  return train(variant, config, std::span<const PreparedRecord>(prepared), tc, seed, on_epoch);
}

}  // namespace mirank
