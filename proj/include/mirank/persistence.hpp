#pragma once

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "mirank/models.hpp"
#include "mirank/simgen.hpp"

namespace mirank {

// ---------------------------------------------------------------------------
// Files

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes via a sibling temporary file and rename, so readers never observe a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::uint32_t file_crc32(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return crc32_of(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Model container
//
//   "MIRANKMD"                 8-byte magic
//   u32 version
//   u32 header length, header  JSON {"variant", "config"}
//   u32 block count
//   per block: u32 name length, name, u32 rows, u32 cols, rows*cols f64 (column-major)
//   u32 CRC-32 of every preceding byte
//
// All integers and floats little-endian.

inline constexpr std::string_view kModelMagic = "MIRANKMD";
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct RawBlock {
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> values;
};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes_.append(s); }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) throw FormatError("model file: unexpected end of data");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"local_dim", c.local_dim}, {"hidden_sizes", c.hidden_sizes}, {"lstm_hidden", c.lstm_hidden},
          {"rep_size", c.rep_size},   {"pos_size", c.pos_size},         {"max_positions", c.max_positions}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.local_dim = j.at("local_dim").get<std::size_t>();
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.rep_size = j.at("rep_size").get<std::size_t>();
  c.pos_size = j.at("pos_size").get<std::size_t>();
  c.max_positions = j.at("max_positions").get<std::size_t>();
  return c;
}

/// Serialises a header and blocks into the container format (with checksum).
inline std::string encode_model_file(const nlohmann::json& header, const std::vector<RawBlock>& blocks,
                                     std::uint32_t version = kModelFormatVersion) {
  detail::ByteWriter w;
  w.raw(kModelMagic);
  w.u32(version);
  const std::string h = header.dump();
  w.u32(static_cast<std::uint32_t>(h.size()));
  w.raw(h);
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const RawBlock& b : blocks) {
    w.u32(static_cast<std::uint32_t>(b.name.size()));
    w.raw(b.name);
    w.u32(b.rows);
    w.u32(b.cols);
    for (double v : b.values) w.f64(v);
  }
  const std::string& bytes = w.bytes();
  w.u32(crc32_of(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  return std::move(w.bytes());
}

inline std::vector<RawBlock> model_blocks(const ModelParams& params) {
  std::vector<RawBlock> out;
  for (const nn::ConstBlockView& v : nn::block_views(params)) {
    out.push_back(RawBlock{v.name, static_cast<std::uint32_t>(v.rows), static_cast<std::uint32_t>(v.cols),
                           std::vector<double>(v.data, v.data + v.size())});
  }
  return out;
}

inline std::string encode_model(const ModelParams& params) {
  const nlohmann::json header = {{"variant", std::string(to_string(params.variant))},
                                 {"config", config_to_json(params.config)}};
  return encode_model_file(header, model_blocks(params));
}

inline ModelParams decode_model(const std::uint8_t* data, std::size_t size) {
  constexpr std::size_t kMinimum = kModelMagic.size() + 4 + 4 + 4 + 4;
  if (size < kModelMagic.size() || std::memcmp(data, kModelMagic.data(), kModelMagic.size()) != 0) {
    if (size < kModelMagic.size()) throw ChecksumError("model file truncated");
    throw FormatError("not a model file (bad magic)");
  }
  if (size < kMinimum) throw ChecksumError("model file truncated");
  detail::ByteReader tail(data + size - 4, 4);
  if (tail.u32() != crc32_of(data, size - 4)) throw ChecksumError("model file checksum mismatch");

  detail::ByteReader r(data + kModelMagic.size(), size - 4 - kModelMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw VersionError("model format version " + std::to_string(version) + " (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint32_t header_len = r.u32();
  nlohmann::json header;
  Variant variant;
  ModelConfig config;
  try {
    header = nlohmann::json::parse(r.str(header_len));
    variant = parse_variant(header.at("variant").get<std::string>());
    config = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model header: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("model header: ") + e.what());
  }
  // Guard allocation against absurd headers before building the expected shapes.
  std::size_t expected_values = 0;
  {
    const std::size_t limit = 1u << 26;
    auto bounded = [&](std::size_t v) {
      if (v == 0 || v > limit) throw ShapeError("model header: implausible size " + std::to_string(v));
    };
    bounded(config.local_dim);
    bounded(config.lstm_hidden);
    bounded(config.rep_size);
    bounded(config.pos_size);
    bounded(config.max_positions);
    for (std::size_t h : config.hidden_sizes) bounded(h);
    if (config.hidden_sizes.size() > 64) throw ShapeError("model header: too many layers");
    expected_values = r.remaining() / 8;
  }
  ModelParams params;
  try {
    params = ModelParams::zeros(variant, config);
  } catch (const std::bad_alloc&) {
    throw ShapeError("model header: shapes too large");
  }
  auto views = nn::block_views(params);
  std::size_t total = 0;
  for (const auto& v : views) total += static_cast<std::size_t>(v.size());
  if (total > expected_values) throw ShapeError("model file smaller than its declared shapes");

  const std::uint32_t count = r.u32();
  if (count != views.size()) {
    throw ShapeError("model file has " + std::to_string(count) + " blocks, " + std::string(to_string(variant)) +
                     " expects " + std::to_string(views.size()));
  }
  for (nn::BlockView& v : views) {
    const std::uint32_t name_len = r.u32();
    if (name_len > 256) throw FormatError("model file: block name too long");
    const std::string name = r.str(name_len);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (name != v.name || rows != v.rows || cols != v.cols) {
      throw ShapeError("block '" + name + "' " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " does not match expected '" + v.name + "' " + std::to_string(v.rows) + "x" +
                       std::to_string(v.cols));
    }
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data[k] = r.f64();
  }
  if (r.remaining() != 0) throw FormatError("model file: trailing bytes");
  return params;
}

inline void save_model(const ModelParams& params, const std::filesystem::path& path) {
  write_file_atomic(path, encode_model(params));
}

inline ModelParams load_model(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_model(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// JSONL query logs: one object per line
//   {"query_id", "items": [{"id", "price", "features": [...]}], "labels": [...],
//    "ground_truth_probs": [...] (optional)}
// Reals are written with 17 significant digits so every double round-trips.

namespace detail {

inline void append_real(std::string& out, double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialise non-finite value");
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

template <class Range, class Fn>
void append_array(std::string& out, const Range& values, Fn&& each) {
  out.push_back('[');
  bool first = true;
  for (const auto& v : values) {
    if (!first) out.push_back(',');
    first = false;
    each(out, v);
  }
  out.push_back(']');
}

}  // namespace detail

inline std::string record_to_line(const QueryRecord& r) {
  std::string out = "{\"query_id\":" + std::to_string(r.query_id) + ",\"items\":";
  detail::append_array(out, r.displayed, [](std::string& o, const Item& it) {
    o += "{\"id\":" + std::to_string(it.id) + ",\"price\":";
    detail::append_real(o, it.price);
    o += ",\"features\":";
    detail::append_array(o, std::span<const double>(it.local_features.data(), it.local_features.size()),
                         [](std::string& oo, double v) { detail::append_real(oo, v); });
    o.push_back('}');
  });
  out += ",\"labels\":";
  detail::append_array(out, r.labels, [](std::string& o, int v) { o += std::to_string(v); });
  if (!r.ground_truth_probs.empty()) {
    out += ",\"ground_truth_probs\":";
    detail::append_array(out, r.ground_truth_probs, [](std::string& o, double v) { detail::append_real(o, v); });
  }
  out.push_back('}');
  return out;
}

inline QueryRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  QueryRecord r;
  r.query_id = j.at("query_id").get<std::int64_t>();
  const auto& items = j.at("items");
  if (!items.is_array()) throw ValidationError("'items' is not an array");
  for (const auto& ji : items) {
    Item it;
    it.id = ji.at("id").get<ItemId>();
    it.price = ji.at("price").get<double>();
    const auto f = ji.at("features").get<std::vector<double>>();
    it.local_features = Eigen::Map<const Vec>(f.data(), static_cast<Eigen::Index>(f.size()));
    r.displayed.push_back(std::move(it));
  }
  r.labels = j.at("labels").get<std::vector<int>>();
  if (j.contains("ground_truth_probs")) r.ground_truth_probs = j.at("ground_truth_probs").get<std::vector<double>>();
  if (r.labels.size() != r.displayed.size()) {
    throw ValidationError("arity mismatch: " + std::to_string(r.labels.size()) + " labels for " +
                          std::to_string(r.displayed.size()) + " items");
  }
  validate_record(r, false);
  return r;
}

inline void write_logs(const Dataset& dataset, std::ostream& os) {
  for (const QueryRecord& r : dataset.records) os << record_to_line(r) << '\n';
}

inline void write_logs(const Dataset& dataset, const std::filesystem::path& path) {
  std::ostringstream os;
  write_logs(dataset, os);
  write_file_atomic(path, os.str());
}

/// Streams records line by line; blank lines are skipped. Any malformed line
/// raises ParseError with its 1-based line number.
inline Dataset read_logs(std::istream& is, std::string split = {}) {
  Dataset ds;
  ds.split = std::move(split);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      ds.records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return ds;
}

inline Dataset read_logs(const std::filesystem::path& path, std::string split = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_logs(in, std::move(split));
}

}  // namespace mirank
