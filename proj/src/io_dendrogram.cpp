#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>

#include <json.hpp>

#include "safari/error.hpp"
#include "safari/io.hpp"

namespace safari {

namespace {

using nlohmann::json;

constexpr std::string_view kFormatName = "safari-dendrogram";
constexpr std::string_view kRegistryFormatName = "safari-sfs-registry";
constexpr int kFormatVersion = 1;
constexpr std::string_view kDigestPrefix = "sha256:";

std::string encode_f32(const Matrix& m) {
  std::string bytes;
  bytes.reserve(4 * static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c)));
      for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
  }
  return base64_encode(bytes);
}

Matrix decode_f32(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
  const std::string bytes = base64_decode(text);
  if (bytes.size() != 4 * static_cast<std::size_t>(rows * cols)) {
    throw_input("basis payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                std::to_string(4 * rows * cols));
  }
  Matrix m(rows, cols);
  std::size_t pos = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c, pos += 4) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
      }
      const float f = std::bit_cast<float>(bits);
      if (!std::isfinite(f)) throw_input("basis payload contains a non-finite value");
      m(r, c) = static_cast<double>(f);
    }
  }
  return m;
}

json subspace_to_json(const SfsEntry& entry) {
  const SemanticFieldSubspace& s = entry.subspace;
  json j;
  j["iteration"] = entry.iteration;
  j["member_count"] = s.member_count;
  j["source_cluster_id"] = s.source_cluster_id ? json(*s.source_cluster_id) : json(nullptr);
  j["iteration_created"] = s.iteration_created ? json(*s.iteration_created) : json(nullptr);
  j["rank"] = s.rank();
  j["dim"] = s.dim();
  json sv = json::array();
  for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) sv.push_back(s.singular_values[i]);
  j["singular_values"] = std::move(sv);
  j["basis_f32"] = encode_f32(s.basis);
  return j;
}

SfsEntry subspace_from_json(const json& j) {
  SfsEntry entry;
  entry.iteration = j.at("iteration").get<std::size_t>();
  SemanticFieldSubspace& s = entry.subspace;
  s.member_count = j.at("member_count").get<std::size_t>();
  if (!j.at("source_cluster_id").is_null()) {
    s.source_cluster_id = j["source_cluster_id"].get<ClusterId>();
  }
  if (!j.at("iteration_created").is_null()) {
    s.iteration_created = j["iteration_created"].get<std::size_t>();
  }
  const auto rank = j.at("rank").get<Eigen::Index>();
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto& sv = j.at("singular_values");
  if (!sv.is_array() || static_cast<Eigen::Index>(sv.size()) != rank) {
    throw_input("SFS entry at iteration " + std::to_string(entry.iteration) +
                ": singular value count disagrees with rank");
  }
  s.singular_values.resize(rank);
  for (Eigen::Index i = 0; i < rank; ++i) s.singular_values[i] = sv[i].get<double>();
  s.basis = decode_f32(j.at("basis_f32").get<std::string>(), rank, dim);
  return entry;
}

json config_to_json(const SafariConfig& c) {
  json j;
  j["window_size"] = c.window_size;
  j["multiplier"] = c.multiplier;
  j["min_observations"] = c.effective_min_observations();
  j["shift_mode"] = std::string(to_string(c.shift_mode));
  j["seed"] = c.seed;
  return j;
}

SafariConfig config_from_json(const json& j) {
  SafariConfig c;
  c.window_size = j.at("window_size").get<std::size_t>();
  c.multiplier = j.at("multiplier").get<double>();
  c.min_observations = j.at("min_observations").get<std::size_t>();
  c.shift_mode = parse_shift_mode(j.at("shift_mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json doubles(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

json event_to_json(const MergeEvent& ev) {
  json j;
  j["iteration"] = ev.iteration;
  j["left_id"] = ev.left_id;
  j["right_id"] = ev.right_id;
  j["new_id"] = ev.new_id;
  j["dominant_id"] = ev.dominant_id;
  j["left_size"] = ev.left_size;
  j["right_size"] = ev.right_size;
  j["linkage_distance"] = ev.linkage_distance;
  if (ev.exact) {
    json e;
    e["total"] = ev.exact->total;
    e["dis_sum"] = ev.exact->dis_sum;
    e["dc_sum"] = ev.exact->dc_sum;
    e["dis_terms"] = doubles(ev.exact->dis_terms);
    e["dc_terms"] = doubles(ev.exact->dc_terms);
    j["exact"] = std::move(e);
  } else {
    j["exact"] = nullptr;
  }
  j["approx"] = ev.approx ? json(*ev.approx) : json(nullptr);
  j["threshold_mu"] = ev.threshold_mu;
  j["threshold_tau"] = ev.threshold_tau;
  j["is_sfs"] = ev.is_sfs;
  return j;
}

MergeEvent event_from_json(const json& j) {
  MergeEvent ev;
  ev.iteration = j.at("iteration").get<std::size_t>();
  ev.left_id = j.at("left_id").get<ClusterId>();
  ev.right_id = j.at("right_id").get<ClusterId>();
  ev.new_id = j.at("new_id").get<ClusterId>();
  ev.dominant_id = j.at("dominant_id").get<ClusterId>();
  ev.left_size = j.at("left_size").get<std::size_t>();
  ev.right_size = j.at("right_size").get<std::size_t>();
  ev.linkage_distance = j.at("linkage_distance").get<double>();
  if (!j.at("exact").is_null()) {
    const json& e = j["exact"];
    ShiftBreakdown s;
    s.total = e.at("total").get<double>();
    s.dis_sum = e.at("dis_sum").get<double>();
    s.dc_sum = e.at("dc_sum").get<double>();
    s.dis_terms = e.at("dis_terms").get<std::vector<double>>();
    s.dc_terms = e.at("dc_terms").get<std::vector<double>>();
    ev.exact = std::move(s);
  }
  if (!j.at("approx").is_null()) ev.approx = j["approx"].get<double>();
  ev.threshold_mu = j.at("threshold_mu").get<double>();
  ev.threshold_tau = j.at("threshold_tau").get<double>();
  ev.is_sfs = j.at("is_sfs").get<bool>();
  return ev;
}

std::string digest_of(const json& body) { return std::string(kDigestPrefix) + sha256_hex(body.dump()); }

// Parses `text`, checks the embedded digest against the remaining fields and
// returns them without the digest key.
json verified_body(std::string_view text, std::string_view what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw_input(std::string(what) + ": digest check failed (file is truncated or not valid JSON)");
  }
  if (!j.is_object() || !j.contains("digest") || !j["digest"].is_string()) {
    throw_input(std::string(what) + ": digest check failed (no digest field)");
  }
  const std::string recorded = j["digest"].get<std::string>();
  j.erase("digest");
  const std::string actual = digest_of(j);
  if (recorded != actual) {
    throw_input(std::string(what) + ": digest mismatch (recorded " + recorded + ", computed " +
                actual + ")");
  }
  return j;
}

void check_header(const json& j, std::string_view name, std::string_view what) {
  if (!j.contains("format") || j["format"] != name) {
    throw_input(std::string(what) + ": not a " + std::string(name) + " document");
  }
  if (!j.contains("version") || j["version"] != kFormatVersion) {
    throw_input(std::string(what) + ": unsupported version");
  }
}

std::string finish(json body) {
  const std::string digest = digest_of(body);
  body["digest"] = digest;
  return body.dump(1) + "\n";
}

template <typename F>
auto wrap_json_errors(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw_input(std::string(what) + ": malformed field: " + e.what());
  }
}

}  // namespace

std::string encode_dendrogram(const Dendrogram& dendrogram) {
  json body;
  body["format"] = kFormatName;
  body["version"] = kFormatVersion;
  body["config"] = config_to_json(dendrogram.config);
  body["n_leaves"] = dendrogram.n_leaves;
  json events = json::array();
  for (const MergeEvent& ev : dendrogram.events) events.push_back(event_to_json(ev));
  body["events"] = std::move(events);
  json registry = json::array();
  for (const SfsEntry& e : dendrogram.sfs_registry) registry.push_back(subspace_to_json(e));
  body["sfs_registry"] = std::move(registry);
  return finish(std::move(body));
}

Dendrogram decode_dendrogram(std::string_view text) {
  const json j = verified_body(text, "dendrogram");
  check_header(j, kFormatName, "dendrogram");
  Dendrogram d = wrap_json_errors("dendrogram", [&] {
    Dendrogram out;
    out.config = config_from_json(j.at("config"));
    out.n_leaves = j.at("n_leaves").get<std::size_t>();
    for (const json& ev : j.at("events")) out.events.push_back(event_from_json(ev));
    for (const json& e : j.at("sfs_registry")) out.sfs_registry.push_back(subspace_from_json(e));
    return out;
  });
  validate_dendrogram(d);
  return d;
}

void save_dendrogram(const Dendrogram& dendrogram, const std::filesystem::path& path) {
  write_file(path, encode_dendrogram(dendrogram));
}

Dendrogram load_dendrogram(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return decode_dendrogram(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string encode_sfs_registry(const std::vector<SfsEntry>& registry) {
  json body;
  body["format"] = kRegistryFormatName;
  body["version"] = kFormatVersion;
  json entries = json::array();
  for (const SfsEntry& e : registry) entries.push_back(subspace_to_json(e));
  body["sfs_registry"] = std::move(entries);
  return finish(std::move(body));
}

std::vector<SfsEntry> decode_sfs_registry(std::string_view text) {
  const json j = verified_body(text, "SFS registry");
  check_header(j, kRegistryFormatName, "SFS registry");
  return wrap_json_errors("SFS registry", [&] {
    std::vector<SfsEntry> out;
    for (const json& e : j.at("sfs_registry")) out.push_back(subspace_from_json(e));
    return out;
  });
}

// ---------------------------------------------------------------------------
// Trace CSV

std::string encode_trace_csv(const std::vector<ShiftRecord>& trace) {
  std::string out = "iteration,exact,approx,mu,tau,is_sfs\n";
  for (const ShiftRecord& r : trace) {
    out += std::to_string(r.iteration);
    out.push_back(',');
    if (r.exact) out += format_double(*r.exact);
    out.push_back(',');
    if (r.approx) out += format_double(*r.approx);
    out.push_back(',');
    out += format_double(r.mu);
    out.push_back(',');
    out += format_double(r.tau);
    out.push_back(',');
    out += r.is_sfs ? "1" : "0";
    out.push_back('\n');
  }
  return out;
}

namespace {

std::optional<double> parse_optional(std::string_view field, const std::string& where) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw_input(where + ": cannot parse '" + std::string(field) + "' as a number");
  }
  return v;
}

}  // namespace

std::vector<ShiftRecord> decode_trace_csv(std::string_view text) {
  std::vector<ShiftRecord> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != "iteration,exact,approx,mu,tau,is_sfs") {
        throw_input("trace line 1: expected header iteration,exact,approx,mu,tau,is_sfs");
      }
      continue;
    }
    if (line.empty()) continue;
    const std::string where = "trace line " + std::to_string(line_no);
    std::vector<std::string_view> f;
    std::size_t s = 0;
    while (true) {
      const std::size_t comma = line.find(',', s);
      f.push_back(line.substr(s, comma == std::string_view::npos ? comma : comma - s));
      if (comma == std::string_view::npos) break;
      s = comma + 1;
    }
    if (f.size() != 6) throw_input(where + ": expected 6 fields, found " + std::to_string(f.size()));
    ShiftRecord r;
    const auto it = parse_optional(f[0], where);
    if (!it || *it < 0 || *it != std::floor(*it)) throw_input(where + ": bad iteration");
    r.iteration = static_cast<std::size_t>(*it);
    r.exact = parse_optional(f[1], where);
    r.approx = parse_optional(f[2], where);
    const auto mu = parse_optional(f[3], where);
    const auto tau = parse_optional(f[4], where);
    if (!mu || !tau) throw_input(where + ": mu and tau are required");
    r.mu = *mu;
    r.tau = *tau;
    if (f[5] != "0" && f[5] != "1") throw_input(where + ": is_sfs must be 0 or 1");
    r.is_sfs = f[5] == "1";
    out.push_back(r);
  }
  if (line_no == 0) throw_input("trace: empty file");
  return out;
}

}  // namespace safari
