#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>

#include <json.hpp>

#include "safari/error.hpp"
#include "safari/io.hpp"

namespace safari {

EmbeddingFormat parse_embedding_format(std::string_view text) {
  if (text == "binary" || text == "sfse") return EmbeddingFormat::binary;
  if (text == "csv") return EmbeddingFormat::csv;
  if (text == "jsonl") return EmbeddingFormat::jsonl;
  throw_usage("unknown embedding format '" + std::string(text) + "' (expected binary|csv|jsonl)");
}

EmbeddingFormat infer_embedding_format(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return EmbeddingFormat::csv;
  if (ext == ".jsonl") return EmbeddingFormat::jsonl;
  return EmbeddingFormat::binary;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                             const LoadOptions& options) {
  const std::string bytes = read_file(path);
  try {
    switch (format) {
      case EmbeddingFormat::binary: return decode_binary(bytes, options);
      case EmbeddingFormat::csv: return decode_csv(bytes, options);
      case EmbeddingFormat::jsonl: return decode_jsonl(bytes, options);
    }
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
  throw_usage("unreachable embedding format");
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, const LoadOptions& options) {
  return load_embeddings(path, infer_embedding_format(path), options);
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     EmbeddingFormat format) {
  switch (format) {
    case EmbeddingFormat::binary: write_file(path, encode_binary(set)); return;
    case EmbeddingFormat::csv: write_file(path, encode_csv(set)); return;
    case EmbeddingFormat::jsonl: write_file(path, encode_jsonl(set)); return;
  }
}

// ---------------------------------------------------------------------------
// Binary

namespace {

constexpr char kMagic[4] = {'S', 'F', 'S', 'E'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagIds = 1u << 0;
constexpr std::uint32_t kFlagLabels = 1u << 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_string(std::string& out, const std::string& s) {
  if (s.size() > UINT32_MAX) throw_usage("string too long for the binary format");
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw_usage(std::string(what) + " exceeds the binary format's u32 range");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void need(std::size_t count, const char* what) const {
    if (bytes_.size() - pos_ < count) {
      throw_input("truncated at byte " + std::to_string(pos_) + " while reading " + what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(const char* what) {
    const std::uint32_t len = u32(what);
    need(len, what);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  std::string_view raw(std::size_t count, const char* what) {
    need(count, what);
    const std::string_view out = bytes_.substr(pos_, count);
    pos_ += count;
    return out;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_binary(const EmbeddingSet& set) {
  const std::uint32_t n = checked_u32(set.n(), "row count");
  const std::uint32_t d = checked_u32(set.d(), "dimension");
  std::uint32_t flags = 0;
  if (set.ids) flags |= kFlagIds;
  if (set.labels) flags |= kFlagLabels;

  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, flags);
  put_u32(out, n);
  put_u32(out, d);
  out.reserve(out.size() + 4ull * n * d);
  for (Eigen::Index r = 0; r < set.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < set.rows.cols(); ++c) {
      const auto f = static_cast<float>(set.rows(r, c));
      if (!std::isfinite(f)) {
        throw_numeric("row " + std::to_string(r) + " column " + std::to_string(c) +
                      " is not representable as binary32");
      }
      put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  if (set.ids) {
    if (set.ids->size() != set.n()) throw_usage("id count does not match row count");
    for (const std::string& id : *set.ids) put_string(out, id);
  }
  if (set.labels) {
    const LabelHierarchy& h = *set.labels;
    if (h.level_count() > 255) throw_usage("too many label levels for the binary format");
    out.push_back(static_cast<char>(h.level_count()));
    for (std::size_t k = 0; k < h.level_count(); ++k) {
      if (h.levels[k].size() != set.n()) throw_usage("label count does not match row count");
      for (LabelId id : h.levels[k]) put_u32(out, id);
      put_u32(out, checked_u32(h.vocab[k].size(), "vocabulary size"));
      for (const std::string& name : h.vocab[k]) put_string(out, name);
    }
  }
  return out;
}

EmbeddingSet decode_binary(std::string_view bytes, const LoadOptions& options) {
  Reader in(bytes);
  const std::string_view magic = in.raw(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw_input("bad magic (expected \"SFSE\")");
  const std::uint32_t version = in.u32("version");
  if (version != kVersion) {
    throw_input("unsupported version " + std::to_string(version) + " (expected 1)");
  }
  const std::uint32_t flags = in.u32("flags");
  if ((flags & ~(kFlagIds | kFlagLabels)) != 0) {
    throw_input("unknown flag bits " + std::to_string(flags));
  }
  const std::uint32_t n = in.u32("row count");
  const std::uint32_t d = in.u32("dimension");
  if (n == 0 || d == 0) throw_input("empty embedding matrix (n or d is zero)");
  in.need(4ull * n * d, "embedding values");

  EmbeddingSet set;
  set.rows.resize(n, d);
  for (std::uint32_t r = 0; r < n; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) {
      const float f = in.f32("embedding values");
      if (!std::isfinite(f)) {
        throw_input("row " + std::to_string(r) + " column " + std::to_string(c) +
                    ": non-finite value");
      }
      set.rows(r, c) = static_cast<double>(f);
    }
  }
  if (flags & kFlagIds) {
    set.ids.emplace();
    set.ids->reserve(n);
    for (std::uint32_t r = 0; r < n; ++r) set.ids->push_back(in.str("row id"));
  }
  if (flags & kFlagLabels) {
    LabelHierarchy h;
    const std::uint8_t levels = in.u8("label level count");
    h.levels.resize(levels);
    h.vocab.resize(levels);
    for (std::size_t k = 0; k < levels; ++k) {
      in.need(4ull * n, "label ids");
      h.levels[k].resize(n);
      for (std::uint32_t r = 0; r < n; ++r) h.levels[k][r] = in.u32("label ids");
      const std::uint32_t vocab = in.u32("vocabulary size");
      for (std::uint32_t v = 0; v < vocab; ++v) h.vocab[k].push_back(in.str("vocabulary entry"));
    }
    set.labels = std::move(h);
  }
  if (!in.done()) {
    throw_input("trailing bytes after offset " + std::to_string(in.pos()));
  }
  validate_embedding_set(set, options.allow_label_violations);
  return set;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

double parse_number(std::string_view text, const std::string& where) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end || text.empty()) {
    throw_input(where + ": cannot parse '" + std::string(text) + "' as a number");
  }
  if (!std::isfinite(v)) throw_input(where + ": non-finite value");
  return v;
}

}  // namespace

std::string encode_csv(const EmbeddingSet& set) {
  const std::size_t levels = set.labels ? set.labels->level_count() : 0;
  std::string out;
  std::vector<std::string> header;
  if (set.ids) header.push_back("id");
  for (std::size_t k = 0; k < levels; ++k) header.push_back("lv" + std::to_string(k));
  for (std::size_t c = 0; c < set.d(); ++c) header.push_back("v" + std::to_string(c));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out.push_back(',');
    out += header[i];
  }
  out.push_back('\n');
  auto check_field = [](const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos) {
      throw_usage("CSV field '" + s + "' contains a separator character");
    }
  };
  for (std::size_t r = 0; r < set.n(); ++r) {
    bool first = true;
    auto sep = [&] {
      if (!first) out.push_back(',');
      first = false;
    };
    if (set.ids) {
      check_field((*set.ids)[r]);
      sep();
      out += (*set.ids)[r];
    }
    for (std::size_t k = 0; k < levels; ++k) {
      const std::string& name = set.labels->vocab[k][set.labels->levels[k][r]];
      check_field(name);
      sep();
      out += name;
    }
    for (std::size_t c = 0; c < set.d(); ++c) {
      sep();
      out += format_double(set.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out.push_back('\n');
  }
  return out;
}

EmbeddingSet decode_csv(std::string_view text, const LoadOptions& options) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(trim_cr(text.substr(start, end - start)));
    start = end + 1;
  }
  if (lines.empty() || lines.front().empty()) throw_input("line 1: missing CSV header");

  const auto header = split_fields(lines.front());
  std::size_t col = 0;
  const bool has_id = header[0] == "id";
  if (has_id) ++col;
  std::size_t levels = 0;
  while (col < header.size() && header[col] == "lv" + std::to_string(levels)) {
    ++levels;
    ++col;
  }
  const std::size_t first_value = col;
  for (std::size_t c = first_value; c < header.size(); ++c) {
    if (header[c] != "v" + std::to_string(c - first_value)) {
      throw_input("line 1: unexpected header column '" + std::string(header[c]) + "' (expected v" +
                  std::to_string(c - first_value) + ")");
    }
  }
  const std::size_t d = header.size() - first_value;
  if (d == 0) throw_input("line 1: header declares no vector columns");

  std::vector<std::vector<double>> values;
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> labels;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::size_t row = values.size();
    const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(li + 1) + ")";
    const auto fields = split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw_input(where + ": expected " + std::to_string(header.size()) + " fields (" +
                  std::to_string(d) + " values), found " + std::to_string(fields.size()));
    }
    if (has_id) ids.emplace_back(fields[0]);
    if (levels) {
      std::vector<std::string> path;
      for (std::size_t k = 0; k < levels; ++k) {
        path.emplace_back(fields[(has_id ? 1 : 0) + k]);
      }
      labels.push_back(std::move(path));
    }
    std::vector<double> v(d);
    for (std::size_t c = 0; c < d; ++c) {
      v[c] = parse_number(fields[first_value + c], where + " column v" + std::to_string(c));
    }
    values.push_back(std::move(v));
  }
  if (values.empty()) throw_input("CSV contains a header but no rows");

  EmbeddingSet set;
  set.rows.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      set.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
    }
  }
  if (has_id) set.ids = std::move(ids);
  if (levels) set.labels = hierarchy_from_strings(labels);
  validate_embedding_set(set, options.allow_label_violations);
  return set;
}

// ---------------------------------------------------------------------------
// JSONL

std::string encode_jsonl(const EmbeddingSet& set) {
  std::string out;
  for (std::size_t r = 0; r < set.n(); ++r) {
    nlohmann::json obj;
    if (set.ids) obj["id"] = (*set.ids)[r];
    if (set.labels) {
      nlohmann::json labels = nlohmann::json::array();
      for (std::size_t k = 0; k < set.labels->level_count(); ++k) {
        labels.push_back(set.labels->vocab[k][set.labels->levels[k][r]]);
      }
      obj["labels"] = std::move(labels);
    }
    nlohmann::json vec = nlohmann::json::array();
    for (std::size_t c = 0; c < set.d(); ++c) {
      vec.push_back(set.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    obj["vector"] = std::move(vec);
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

EmbeddingSet decode_jsonl(std::string_view text, const LoadOptions& options) {
  std::vector<std::vector<double>> values;
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> labels;
  std::optional<bool> has_id;
  std::optional<bool> has_labels;
  std::size_t d = 0;

  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    const std::string_view line = trim_cr(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::string where = "row " + std::to_string(values.size()) + " (line " +
                              std::to_string(line_no) + ")";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw_input(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw_input(where + ": expected a JSON object");

    const bool row_has_id = obj.contains("id");
    const bool row_has_labels = obj.contains("labels");
    if (!has_id) has_id = row_has_id;
    if (!has_labels) has_labels = row_has_labels;
    if (*has_id != row_has_id) throw_input(where + ": 'id' present on some rows only");
    if (*has_labels != row_has_labels) throw_input(where + ": 'labels' present on some rows only");

    if (row_has_id) {
      if (!obj["id"].is_string()) throw_input(where + ": 'id' must be a string");
      ids.push_back(obj["id"].get<std::string>());
    }
    if (row_has_labels) {
      const auto& arr = obj["labels"];
      if (!arr.is_array()) throw_input(where + ": 'labels' must be an array");
      std::vector<std::string> path;
      for (const auto& l : arr) {
        if (l.is_string()) {
          path.push_back(l.get<std::string>());
        } else if (l.is_number_integer()) {
          path.push_back(std::to_string(l.get<long long>()));
        } else {
          throw_input(where + ": labels must be strings or integers");
        }
      }
      if (!labels.empty() && path.size() != labels.front().size()) {
        throw_input(where + ": expected " + std::to_string(labels.front().size()) +
                    " label levels, found " + std::to_string(path.size()));
      }
      labels.push_back(std::move(path));
    }
    if (!obj.contains("vector") || !obj["vector"].is_array()) {
      throw_input(where + ": missing 'vector' array");
    }
    const auto& vec = obj["vector"];
    if (values.empty()) d = vec.size();
    if (vec.size() != d || d == 0) {
      throw_input(where + ": expected " + std::to_string(d) + " values, found " +
                  std::to_string(vec.size()));
    }
    std::vector<double> v;
    v.reserve(d);
    for (const auto& x : vec) {
      if (!x.is_number()) throw_input(where + ": vector entries must be numbers");
      const double value = x.get<double>();
      if (!std::isfinite(value)) throw_input(where + ": non-finite value");
      v.push_back(value);
    }
    values.push_back(std::move(v));
  }
  if (values.empty()) throw_input("JSONL contains no rows");

  EmbeddingSet set;
  set.rows.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      set.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
    }
  }
  if (has_id.value_or(false)) set.ids = std::move(ids);
  if (has_labels.value_or(false) && !labels.empty() && !labels.front().empty()) {
    set.labels = hierarchy_from_strings(labels);
  }
  validate_embedding_set(set, options.allow_label_violations);
  return set;
}

}  // namespace safari
