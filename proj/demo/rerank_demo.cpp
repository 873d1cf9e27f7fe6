// Small end-to-end run: simulate logs, train miDNN and miRNN, compare the
// expected GMV of their rankings against the local baseline on fresh queries.

#include <iostream>

#include "mirank/mirank.hpp"

int main() {
  using namespace mirank;
  const Catalog catalog = generate_catalog(2000, 23, RngSeed{1});
  const BehaviorConfig behavior;
  LogConfig lc;
  lc.train_queries = 1500;
  lc.test_queries = 200;
  const GeneratedLogs logs = generate_logs(behavior, catalog, lc, RngSeed{2});
  std::cout << "train records " << logs.train.records.size() << ", filter acceptance " << logs.acceptance_rate << "\n";

  TrainConfig tc;
  tc.epochs = 3;
  const ModelConfig mc;
  const TrainResult base = train(Variant::baseline, mc, logs.train.records, tc, RngSeed{3});
  const TrainResult dnn = train(Variant::midnn, mc, logs.train.records, tc, RngSeed{3});
  const TrainResult rnn = train(Variant::mirnn, mc, logs.train.records, tc, RngSeed{3});

  for (const auto& [name, model] : {std::pair{"baseline", &base.params}, std::pair{"miDNN", &dnn.params},
                                    std::pair{"miRNN", &rnn.params}}) {
    const MetricReport r = evaluate_model(name, *model, logs.test.records);
    std::cout << name << ": AUC " << r.auc << " RIG " << r.rig << "\n";
  }

  ComparisonConfig cc;
  cc.queries = 100;
  const PolicyComparison cmp = compare_policies(
      {model_policy("baseline", base.params), model_policy("miDNN", dnn.params), model_policy("miRNN", rnn.params)},
      behavior, catalog, cc, RngSeed{4});
  for (const PolicyStats& s : cmp.policies) {
    std::cout << s.name << " mean GMV " << s.mean_gmv << " +/- " << s.std_error << "\n";
  }
  const PairedDifference d = cmp.difference("miRNN", "miDNN");
  std::cout << "miRNN - miDNN: " << d.mean << " [" << d.ci_low << ", " << d.ci_high << "]\n";
}
