#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace mirank {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("mirank_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST(ModelFile, RoundTripIsBitExact) {
  TempDir dir;
  Rng rng(RngSeed{1});
  for (Variant v : {Variant::baseline, Variant::midnn, Variant::mirnn, Variant::mirnn_attention}) {
    const ModelParams m = ModelParams::initialize(v, ModelConfig{}, rng);
    save_model(m, dir / "m.bin");
    const ModelParams back = load_model(dir / "m.bin");
    EXPECT_EQ(back.variant, v);
    EXPECT_TRUE(same_parameters(m, back));
    EXPECT_EQ(back.config.hidden_sizes, m.config.hidden_sizes);
    EXPECT_FALSE(fs::exists(dir / "m.bin.tmp"));
  }
}

TEST(ModelFile, TruncationIsChecksumError) {
  Rng rng(RngSeed{2});
  const std::string bytes = encode_model(ModelParams::initialize(Variant::mirnn, testing::small_config(), rng));
  for (std::size_t keep : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
    EXPECT_THROW(decode_model(data, keep), ChecksumError) << keep;
  }
}

TEST(ModelFile, BitFlipIsChecksumError) {
  Rng rng(RngSeed{3});
  std::string bytes = encode_model(ModelParams::initialize(Variant::midnn, testing::small_config(), rng));
  bytes[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(decode_model(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()), ChecksumError);
}

TEST(ModelFile, VersionMismatch) {
  Rng rng(RngSeed{4});
  const ModelParams m = ModelParams::initialize(Variant::midnn, testing::small_config(), rng);
  const nlohmann::json header = {{"variant", "miDNN"}, {"config", config_to_json(m.config)}};
  const std::string bytes = encode_model_file(header, model_blocks(m), kModelFormatVersion + 1);
  EXPECT_THROW(decode_model(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()), VersionError);
}

TEST(ModelFile, RecurrentHeaderWithMlpBlocksIsShapeError) {
  Rng rng(RngSeed{5});
  const ModelParams m = ModelParams::initialize(Variant::midnn, testing::small_config(), rng);
  const nlohmann::json header = {{"variant", "miRNN"}, {"config", config_to_json(m.config)}};
  const std::string bytes = encode_model_file(header, model_blocks(m));
  EXPECT_THROW(decode_model(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()), ShapeError);
}

TEST(ModelFile, BadMagicIsFormatError) {
  std::string bytes(64, 'x');
  EXPECT_THROW(decode_model(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()), FormatError);
}

TEST(ModelFile, MissingFileIsIoError) { EXPECT_THROW(load_model("/nonexistent/dir/m.bin"), IoError); }

TEST(ModelFile, FuzzedMutationsNeverCrash) {
  Rng rng(RngSeed{6});
  const std::string good = encode_model(ModelParams::initialize(Variant::mirnn_attention, testing::small_config(), rng));
  int typed = 0;
  for (int k = 0; k < 300; ++k) {
    std::string bytes = good;
    const int edits = 1 + static_cast<int>(rng.index(4));
    for (int e = 0; e < edits; ++e) bytes[rng.index(bytes.size())] = static_cast<char>(rng.index(256));
    if (rng.bernoulli(0.3)) bytes.resize(rng.index(bytes.size()));
    try {
      decode_model(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
    } catch (const IoError&) {
      ++typed;
    }
  }
  EXPECT_GE(typed, 290);
}

QueryRecord sample_record() {
  QueryRecord r;
  r.query_id = 17;
  r.displayed = {testing::make_item(3, 0.1 + 0.2, {1.0 / 3.0, -2.5e-300}), testing::make_item(8, 123.456, {6.02e23, 0.0})};
  r.labels = {1, 0};
  r.ground_truth_probs = {0.123456789012345678, 1e-17};
  return r;
}

TEST(Logs, RoundTripIsExact) {
  TempDir dir;
  const Catalog cat = generate_catalog(300, 4, RngSeed{7});
  LogConfig lc;
  lc.train_queries = 10;
  lc.test_queries = 3;
  const GeneratedLogs logs = generate_logs(BehaviorConfig{}, cat, lc, RngSeed{8});
  write_logs(logs.train, dir / "train.jsonl");
  const Dataset back = read_logs(dir / "train.jsonl", "train");
  EXPECT_EQ(back, logs.train);

  Dataset tricky{"x", {sample_record()}, std::nullopt};
  write_logs(tricky, dir / "t.jsonl");
  EXPECT_EQ(read_logs(dir / "t.jsonl", "x"), tricky);
}

TEST(Logs, EmptyFileIsEmptyDataset) {
  TempDir dir;
  write_bytes(dir / "e.jsonl", "");
  EXPECT_TRUE(read_logs(dir / "e.jsonl").records.empty());
}

TEST(Logs, OptionalGroundTruthOmitted) {
  QueryRecord r = sample_record();
  r.ground_truth_probs.clear();
  const std::string line = record_to_line(r);
  EXPECT_EQ(line.find("ground_truth_probs"), std::string::npos);
  std::istringstream is(line + "\n");
  EXPECT_EQ(read_logs(is).records.front(), r);
}

TEST(Logs, ArityErrorNamesLine) {
  QueryRecord r = sample_record();
  std::string good = record_to_line(r);
  r.labels.push_back(0);
  const std::string bad = record_to_line(r);
  std::istringstream is(good + "\n" + good + "\n" + bad + "\n");
  try {
    read_logs(is);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("arity"), std::string::npos);
  }
}

TEST(Logs, MalformedJsonNamesLine) {
  std::istringstream is(record_to_line(sample_record()) + "\n{\"query_id\": 1, \"items\": [\n");
  try {
    read_logs(is);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Logs, NonUniformFeatureLengthRejected) {
  std::istringstream is(
      R"({"query_id":1,"items":[{"id":1,"price":2,"features":[1,2]},{"id":2,"price":3,"features":[1]}],"labels":[0,1]})");
  EXPECT_THROW(read_logs(is), ParseError);
}

TEST(Logs, FuzzedLinesRaiseParseErrors) {
  Rng rng(RngSeed{9});
  const std::string good = record_to_line(sample_record());
  for (int k = 0; k < 300; ++k) {
    std::string line = good;
    line[rng.index(line.size())] = static_cast<char>(32 + rng.index(95));
    std::istringstream is(line);
    try {
      read_logs(is);
    } catch (const ParseError&) {
    }
  }
}

}  // namespace
}  // namespace mirank
