// mirank command-line driver: generate, train, rerank, evaluate, bench,
// oracle-compare. Every run writes <subcommand>.manifest.json into the output
// directory with the resolved options, the seed and CRC-32 of each input.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mirank/mirank.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kMetric = 3,
  kIo = 4,
  kNumeric = 5,
  kInternal = 6,
};

struct Globals {
  std::uint64_t seed = 42;
  fs::path output_dir = ".";
};

struct Manifest {
  json inputs = json::array();
  json outputs = json::array();

  void input(const fs::path& p) { inputs.push_back({{"path", p.string()}, {"crc32", mirank::file_crc32(p)}}); }
  void output(const fs::path& p) { outputs.push_back(p.string()); }
};

json resolved_options(const CLI::App& app) {
  json out = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    const std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (key == "config") continue;
    if (opt->get_expected_max() == 0) {
      out[key] = opt->count() > 0;
      continue;
    }
    const std::vector<std::string> values = opt->results().empty() ? opt->get_default_str().empty()
                                                                         ? std::vector<std::string>{}
                                                                         : std::vector<std::string>{opt->get_default_str()}
                                                                   : opt->results();
    if (opt->get_expected_max() > 1 || values.size() > 1) {
      out[key] = values;
    } else {
      out[key] = values.empty() ? json(nullptr) : json(values.front());
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) { mirank::write_file_atomic(path, text); }

void write_manifest(const Globals& g, const CLI::App& root, const CLI::App& sub, const Manifest& m) {
  json j;
  j["subcommand"] = sub.get_name();
  j["seed"] = g.seed;
  j["output_dir"] = g.output_dir.string();
  j["config"] = resolved_options(sub);
  j["global"] = resolved_options(root);
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  write_text(g.output_dir / (sub.get_name() + ".manifest.json"), j.dump(2) + "\n");
}

std::vector<std::size_t> positive_sizes(const std::vector<std::size_t>& v, const char* what) {
  if (v.empty()) throw mirank::ValidationError(std::string(what) + " must not be empty");
  for (std::size_t x : v) {
    if (x == 0) throw mirank::ValidationError(std::string(what) + " entries must be >= 1");
  }
  return v;
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::size_t catalog_size = 5000;
  std::size_t local_dim = 23;
  std::size_t train_queries = 2000;
  std::size_t test_queries = 500;
  std::size_t items_per_query = 50;
  std::size_t pool_factor = 3;
  bool no_filter = false;
  mirank::BehaviorConfig behavior;
};

void cmd_generate(const Globals& g, const GenerateOptions& o, Manifest& m) {
  mirank::CatalogConfig cc;
  cc.n_items = o.catalog_size;
  cc.local_dim = o.local_dim;
  const mirank::Catalog catalog = mirank::generate_catalog(cc, mirank::RngSeed{g.seed});
  mirank::LogConfig lc;
  lc.train_queries = o.train_queries;
  lc.test_queries = o.test_queries;
  lc.items_per_query = o.items_per_query;
  lc.pool_factor = o.pool_factor;
  lc.filter_train = !o.no_filter;
  const mirank::GeneratedLogs logs =
      mirank::generate_logs(o.behavior, catalog, lc, mirank::RngSeed{mirank::Rng::mix(g.seed + 1)});
  const fs::path train = g.output_dir / "train.jsonl", test = g.output_dir / "test.jsonl";
  mirank::write_logs(logs.train, train);
  mirank::write_logs(logs.test, test);
  m.output(train);
  m.output(test);
  std::cout << "train records: " << logs.train.records.size() << " (generated " << logs.train_generated
            << ", purchase-filter acceptance rate " << logs.acceptance_rate << ")\n"
            << "test records: " << logs.test.records.size() << "\n";
}

struct TrainOptions {
  std::string variant = "miDNN";
  fs::path train;
  fs::path model_out;
  std::size_t epochs = 10;
  std::vector<std::size_t> hidden_sizes{50, 50, 30};
  std::size_t lstm_hidden = 50;
  std::size_t rep_size = 10;
  std::size_t pos_size = 5;
  std::size_t max_positions = 100;
  std::size_t batch_sequences = 16;
  std::size_t batch_items = 256;
  double learning_rate = 1e-3;
};

void cmd_train(const Globals& g, const TrainOptions& o, Manifest& m) {
  const mirank::Variant variant = mirank::parse_variant(o.variant);
  m.input(o.train);
  const mirank::Dataset data = mirank::read_logs(o.train, "train");
  if (data.records.empty()) throw mirank::ValidationError("training log is empty");
  mirank::ModelConfig mc;
  mc.local_dim = data.records.front().displayed.front().local_features.size();
  mc.hidden_sizes = positive_sizes(o.hidden_sizes, "--hidden-sizes");
  mc.lstm_hidden = o.lstm_hidden;
  mc.rep_size = o.rep_size;
  mc.pos_size = o.pos_size;
  mc.max_positions = o.max_positions;
  mirank::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_sequences = o.batch_sequences;
  tc.batch_items = o.batch_items;
  tc.adam.learning_rate = o.learning_rate;
  const mirank::TrainResult result =
      mirank::train(variant, mc, data.records, tc, mirank::RngSeed{g.seed}, [](std::size_t epoch, double loss) {
        std::cout << "epoch " << epoch << " loss " << loss << "\n";
      });
  const fs::path model = o.model_out.empty() ? g.output_dir / (o.variant + ".bin") : o.model_out;
  mirank::save_model(result.params, model);
  fs::path curve = model;
  curve.replace_extension(".loss.csv");
  std::ostringstream csv;
  csv << "epoch,mean_loss\n";
  csv.precision(17);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) csv << e + 1 << ',' << result.epoch_loss[e] << '\n';
  write_text(curve, csv.str());
  m.output(model);
  m.output(curve);
}

struct RerankOptions {
  fs::path model;
  fs::path logs;
  fs::path out;
  std::size_t rerank_size = 50;
  std::size_t beam_size = mirank::kDefaultBeamSize;
  double gamma = 1.0;
};

void cmd_rerank(const Globals& g, const RerankOptions& o, Manifest& m) {
  m.input(o.model);
  m.input(o.logs);
  const mirank::ModelParams model = mirank::load_model(o.model);
  const mirank::Dataset data = mirank::read_logs(o.logs);
  std::string text;
  double total = 0.0;
  for (const mirank::QueryRecord& r : data.records) {
    const mirank::CandidateSet set = r.as_candidate_set();
    const mirank::Ranking order =
        mirank::rerank_top_n(set, mirank::Ranking::identity(set.size()), model, o.rerank_size, o.beam_size, o.gamma);
    const std::size_t n = std::min(o.rerank_size, set.size());
    mirank::CandidateSet head;
    for (std::size_t t = 0; t < n; ++t) head.items.push_back(set[order.order[t]]);
    const double value = mirank::expected_gmv(model, head, mirank::Ranking::identity(n));
    total += value;
    json line;
    line["query_id"] = r.query_id;
    json ids = json::array();
    for (std::size_t idx : order.order) ids.push_back(set[idx].id);
    line["order"] = ids;
    line["expected_gmv"] = value;
    text += line.dump() + "\n";
  }
  const fs::path out = o.out.empty() ? g.output_dir / "reranked.jsonl" : o.out;
  write_text(out, text);
  m.output(out);
  std::cout << "queries: " << data.records.size() << " mean expected GMV (top " << o.rerank_size
            << "): " << (data.records.empty() ? 0.0 : total / static_cast<double>(data.records.size())) << "\n";
}

struct EvaluateOptions {
  std::vector<fs::path> models;
  fs::path test;
  std::size_t attention_length = 20;
};

void cmd_evaluate(const Globals& g, const EvaluateOptions& o, Manifest& m) {
  m.input(o.test);
  const mirank::Dataset data = mirank::read_logs(o.test, "test");
  json reports = json::array();
  for (const fs::path& p : o.models) {
    m.input(p);
    const mirank::ModelParams model = mirank::load_model(p);
    const std::string name = p.stem().string();
    reports.push_back(mirank::to_json(mirank::evaluate_model(name, model, data.records)));
    if (model.variant == mirank::Variant::mirnn_attention) {
      const mirank::AttentionMatrix a = mirank::attention_diagnostic(model, data.records, o.attention_length);
      std::ostringstream csv;
      mirank::write_attention_csv(a, csv);
      const fs::path out = g.output_dir / ("attention_" + name + ".csv");
      write_text(out, csv.str());
      m.output(out);
    }
  }
  const fs::path out = g.output_dir / "evaluation.json";
  const std::string text = json{{"models", reports}}.dump(2) + "\n";
  write_text(out, text);
  m.output(out);
  std::cout << text;
}

struct BenchOptions {
  std::vector<fs::path> models;
  std::vector<std::size_t> sizes{10, 20, 40, 80};
  std::vector<std::size_t> beams{1, 2, 4, 8, 16};
  std::size_t reps = 7;
  std::size_t fixed_size = 40;
  std::size_t fixed_beam = mirank::kDefaultBeamSize;
  double min_seconds = 0.02;
};

void cmd_bench(const Globals& g, const BenchOptions& o, Manifest& m) {
  std::vector<mirank::ModelParams> loaded;
  loaded.reserve(o.models.size());
  std::vector<mirank::NamedModel> named;
  for (const fs::path& p : o.models) {
    m.input(p);
    loaded.push_back(mirank::load_model(p));
  }
  for (std::size_t i = 0; i < loaded.size(); ++i) named.push_back({o.models[i].stem().string(), &loaded[i]});
  mirank::BenchConfig cfg;
  cfg.rerank_sizes = positive_sizes(o.sizes, "--sizes");
  cfg.beam_sizes = positive_sizes(o.beams, "--beams");
  cfg.repetitions = o.reps;
  cfg.fixed_size = o.fixed_size;
  cfg.fixed_beam = o.fixed_beam;
  cfg.min_seconds_per_repetition = o.min_seconds;
  if (cfg.repetitions == 0) throw mirank::ValidationError("--reps must be >= 1");
  const mirank::LatencyProfile profile = mirank::latency_bench(named, cfg, mirank::RngSeed{g.seed});
  std::ostringstream csv;
  mirank::write_latency_csv(profile, csv);
  const fs::path out = g.output_dir / "latency.csv", summary = g.output_dir / "latency.json";
  write_text(out, csv.str());
  write_text(summary, mirank::to_json(profile).dump(2) + "\n");
  m.output(out);
  m.output(summary);
  for (const mirank::SlopeFit& s : profile.slopes) {
    std::cout << s.model << " slope vs " << s.axis << ": " << s.slope << "\n";
  }
}

struct OracleOptions {
  fs::path model;
  fs::path logs;
  std::size_t max_n = 6;
  std::vector<std::size_t> beams{1, 2, 5, 720};
};

void cmd_oracle_compare(const Globals& g, const OracleOptions& o, Manifest& m) {
  if (o.max_n < 1 || o.max_n > mirank::kMaxOracleItems) {
    throw mirank::ValidationError("--max-n must lie in [1, " + std::to_string(mirank::kMaxOracleItems) + "]");
  }
  const std::vector<std::size_t> beams = positive_sizes(o.beams, "--beams");
  m.input(o.model);
  m.input(o.logs);
  const mirank::ModelParams model = mirank::load_model(o.model);
  mirank::detail::require_recurrent(model);
  const mirank::Dataset data = mirank::read_logs(o.logs);
  struct Row {
    double sum = 0.0, min = 1.0, max = 0.0;
    std::size_t greedy_matches = 0;
  };
  std::vector<Row> rows(beams.size());
  std::size_t queries = 0;
  for (const mirank::QueryRecord& r : data.records) {
    mirank::CandidateSet set;
    for (std::size_t t = 0; t < std::min(o.max_n, r.displayed.size()); ++t) set.items.push_back(r.displayed[t]);
    const double best = mirank::exhaustive_oracle(model, set).expected_gmv;
    const mirank::RankResult greedy = mirank::greedy_rank(model, set);
    for (std::size_t b = 0; b < beams.size(); ++b) {
      const mirank::RankResult res = mirank::beam_search(model, set, beams[b]);
      const double ratio = best > 0.0 ? res.expected_gmv / best : 1.0;
      rows[b].sum += ratio;
      rows[b].min = std::min(rows[b].min, ratio);
      rows[b].max = std::max(rows[b].max, ratio);
      if (res.ranking == greedy.ranking) ++rows[b].greedy_matches;
    }
    ++queries;
  }
  if (queries == 0) throw mirank::ValidationError("log has no records");
  std::ostringstream csv;
  csv << "beam_size,queries,mean_ratio,min_ratio,max_ratio,greedy_matches\n";
  csv.precision(17);
  for (std::size_t b = 0; b < beams.size(); ++b) {
    csv << beams[b] << ',' << queries << ',' << rows[b].sum / static_cast<double>(queries) << ',' << rows[b].min
        << ',' << rows[b].max << ',' << rows[b].greedy_matches << '\n';
  }
  const fs::path out = g.output_dir / "oracle_compare.csv";
  write_text(out, csv.str());
  m.output(out);
  std::cout << csv.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mutual-influence-aware reranking toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (64-bit)")->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for outputs and the run manifest")->capture_default_str();

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Simulate a catalog and train/test purchase logs");
  generate->add_option("--catalog-size", gen.catalog_size)->capture_default_str();
  generate->add_option("--local-dim", gen.local_dim)->capture_default_str();
  generate->add_option("--train-queries", gen.train_queries)->capture_default_str();
  generate->add_option("--test-queries", gen.test_queries)->capture_default_str();
  generate->add_option("--items-per-query", gen.items_per_query)->capture_default_str();
  generate->add_option("--pool-factor", gen.pool_factor)->capture_default_str();
  generate->add_option("--price-sensitivity", gen.behavior.price_sensitivity)->capture_default_str();
  generate->add_option("--position-bias", gen.behavior.position_bias_strength)->capture_default_str();
  generate->add_option("--order-effect", gen.behavior.order_effect_strength)->capture_default_str();
  generate->add_option("--primacy", gen.behavior.primacy_strength)->capture_default_str();
  generate->add_option("--base-rate", gen.behavior.base_rate)->capture_default_str();
  generate->add_flag("--no-filter", gen.no_filter, "Keep train records without purchases");

  TrainOptions tr;
  CLI::App* train = app.add_subcommand("train", "Train a purchase-probability model");
  train->add_option("--variant", tr.variant, "baseline, miDNN, miRNN or miRNN+attention")->capture_default_str();
  train->add_option("--train", tr.train, "Training log (JSONL)")->required()->check(CLI::ExistingFile);
  train->add_option("--model-out", tr.model_out, "Model path (default <output-dir>/<variant>.bin)");
  train->add_option("--epochs", tr.epochs)->capture_default_str();
  train->add_option("--hidden-sizes", tr.hidden_sizes)->delimiter(',')->capture_default_str();
  train->add_option("--lstm-hidden", tr.lstm_hidden)->capture_default_str();
  train->add_option("--rep-size", tr.rep_size)->capture_default_str();
  train->add_option("--pos-size", tr.pos_size)->capture_default_str();
  train->add_option("--max-positions", tr.max_positions)->capture_default_str();
  train->add_option("--batch-sequences", tr.batch_sequences)->capture_default_str();
  train->add_option("--batch-items", tr.batch_items)->capture_default_str();
  train->add_option("--learning-rate", tr.learning_rate)->capture_default_str();

  RerankOptions rr;
  CLI::App* rerank = app.add_subcommand("rerank", "Rerank the top-N items of every logged query");
  rerank->add_option("--model", rr.model)->required()->check(CLI::ExistingFile);
  rerank->add_option("--logs", rr.logs)->required()->check(CLI::ExistingFile);
  rerank->add_option("--out", rr.out, "Output JSONL (default <output-dir>/reranked.jsonl)");
  rerank->add_option("--rerank-size", rr.rerank_size)->capture_default_str();
  rerank->add_option("--beam-size", rr.beam_size)->capture_default_str();
  rerank->add_option("--gamma", rr.gamma, "Price exponent of the local baseline")->capture_default_str();

  EvaluateOptions ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "AUC/RIG report and attention matrix");
  evaluate->add_option("--model", ev.models)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--test", ev.test)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--attention-length", ev.attention_length)->capture_default_str();

  BenchOptions be;
  CLI::App* bench = app.add_subcommand("bench", "Rerank latency versus rerank size and beam size");
  bench->add_option("--model", be.models)->required()->check(CLI::ExistingFile);
  bench->add_option("--sizes", be.sizes)->delimiter(',')->capture_default_str();
  bench->add_option("--beams", be.beams)->delimiter(',')->capture_default_str();
  bench->add_option("--reps", be.reps)->capture_default_str();
  bench->add_option("--fixed-size", be.fixed_size)->capture_default_str();
  bench->add_option("--fixed-beam", be.fixed_beam)->capture_default_str();
  bench->add_option("--min-seconds", be.min_seconds, "Minimum timed span per repetition")->capture_default_str();

  OracleOptions oc;
  CLI::App* oracle = app.add_subcommand("oracle-compare", "Beam search value over exhaustive-search value");
  oracle->add_option("--model", oc.model)->required()->check(CLI::ExistingFile);
  oracle->add_option("--logs", oc.logs)->required()->check(CLI::ExistingFile);
  oracle->add_option("--max-n", oc.max_n)->capture_default_str();
  oracle->add_option("--beams", oc.beams)->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    fs::create_directories(g.output_dir);
    Manifest m;
    CLI::App* sub = app.get_subcommands().front();
    if (sub == generate) cmd_generate(g, gen, m);
    else if (sub == train) cmd_train(g, tr, m);
    else if (sub == rerank) cmd_rerank(g, rr, m);
    else if (sub == evaluate) cmd_evaluate(g, ev, m);
    else if (sub == bench) cmd_bench(g, be, m);
    else cmd_oracle_compare(g, oc, m);
    write_manifest(g, app, *sub, m);
  } catch (const mirank::MetricError& e) {
    std::cerr << "metric error: " << e.what() << "\n";
    return kMetric;
  } catch (const mirank::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const mirank::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const mirank::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
