#include "safari/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "safari/bench.hpp"
#include "safari/engine.hpp"
#include "safari/error.hpp"
#include "safari/eval.hpp"
#include "safari/io.hpp"
#include "safari/synth.hpp"
#include "safari/thresholding.hpp"

namespace safari::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExitCodeFooter =
    "Exit codes: 0 success, 2 usage error (bad flag or argument), 3 input error (missing, "
    "unreadable or malformed file, digest mismatch), 4 numeric error (non-finite or degenerate "
    "data).\nEnvironment: SAFARI_THREADS caps internal parallelism (0 = all cores).";

const std::vector<double> kStudyMultipliers = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
const std::vector<std::size_t> kStudyWindows = {50, 100, 200};

std::string fmt(double v) { return format_double(v); }

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

EmbeddingSet load_input(const std::string& path, const std::string& format, bool allow_violations) {
  LoadOptions options;
  options.allow_label_violations = allow_violations;
  if (format.empty()) return load_embeddings(path, options);
  return load_embeddings(path, parse_embedding_format(format), options);
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view field(text.data() + start, comma - start);
    std::size_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
      throw_usage(std::string(what) + ": '" + text + "' is not a comma-separated list of integers");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view field(text.data() + start, comma - start);
    double v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
      throw_usage(std::string(what) + ": '" + text + "' is not a comma-separated list of numbers");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
  std::string input;
  std::string format;
  std::string out;
  std::size_t window = 100;
  double multiplier = kDefaultMultiplier;
  std::optional<std::size_t> min_observations;
  std::string shift = "approx";
  std::uint64_t seed = 0;
  bool allow_label_violations = false;
};

SafariConfig make_config(std::size_t window, double multiplier,
                         std::optional<std::size_t> min_observations, const std::string& shift,
                         std::uint64_t seed) {
  SafariConfig config;
  config.window_size = window;
  config.multiplier = multiplier;
  config.min_observations = min_observations;
  config.shift_mode = parse_shift_mode(shift);
  config.seed = seed;
  config.threads = threads_from_env();
  return config;
}

int cmd_cluster(const ClusterArgs& a, std::ostream& out) {
  const SafariConfig config =
      make_config(a.window, a.multiplier, a.min_observations, a.shift, a.seed);
  const EmbeddingSet set = load_input(a.input, a.format, a.allow_label_violations);
  const SafariResult result = run_safari(set, config);

  const fs::path dir(a.out);
  const std::string dendro = encode_dendrogram(result.dendrogram);
  write_file(dir / "dendrogram.json", dendro);
  write_file(dir / "sfs_registry.json", encode_sfs_registry(result.dendrogram.sfs_registry));
  write_file(dir / "trace.csv", encode_trace_csv(result.shift_trace));

  const json parsed = json::parse(dendro);
  out << "merges: " << result.dendrogram.events.size() << "\n";
  out << "SFS count: " << result.dendrogram.sfs_registry.size() << "\n";
  out << "digest: " << parsed["digest"].get<std::string>() << "\n";
  out << "wrote " << (dir / "dendrogram.json").string() << ", "
      << (dir / "sfs_registry.json").string() << ", " << (dir / "trace.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench-shift

struct BenchArgs {
  std::string input;
  std::string format;
  std::string dendrogram;
  std::string trace;
  std::string out;
  std::size_t repeats = 10;
  std::size_t stride = 1;
  std::size_t window = 100;
  double multiplier = kDefaultMultiplier;
  std::optional<std::size_t> min_observations;
};

void summarize_pairs(const std::vector<double>& exact, const std::vector<double>& approx,
                     std::ostream& out) {
  double mae = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) mae += std::abs(exact[i] - approx[i]);
  mae /= static_cast<double>(exact.size());
  out << "pairs: " << exact.size() << "\n";
  out << "mean absolute error: " << fmt(mae) << "\n";
  out << "pearson r: " << fmt(pearson(exact, approx)) << "\n";
}

int cmd_bench_shift(const BenchArgs& a, std::ostream& out) {
  if (!a.trace.empty()) {
    const std::vector<ShiftRecord> trace = decode_trace_csv(read_file(a.trace));
    std::vector<double> exact, approx;
    for (const ShiftRecord& r : trace) {
      if (!r.exact || !r.approx) {
        throw_usage("bench-shift: trace '" + a.trace + "' row " + std::to_string(r.iteration) +
                    " lacks an exact or approximate value; rerun cluster with --shift both");
      }
      exact.push_back(*r.exact);
      approx.push_back(*r.approx);
    }
    if (exact.size() < 2) throw_usage("bench-shift: trace needs at least two rows");
    summarize_pairs(exact, approx, out);
    if (!a.out.empty()) {
      std::string csv = "iteration,exact,approx,abs_error\n";
      for (std::size_t i = 0; i < trace.size(); ++i) {
        csv += std::to_string(trace[i].iteration) + "," + fmt(exact[i]) + "," + fmt(approx[i]) +
               "," + fmt(std::abs(exact[i] - approx[i])) + "\n";
      }
      write_file(fs::path(a.out) / "bench_trace.csv", csv);
    }
    return kExitOk;
  }

  if (a.input.empty()) throw_usage("bench-shift: --input is required unless --trace is given");
  const EmbeddingSet set = load_input(a.input, a.format, true);
  Dendrogram dendro;
  if (!a.dendrogram.empty()) {
    dendro = load_dendrogram(a.dendrogram);
  } else {
    dendro = run_safari(set, make_config(a.window, a.multiplier, a.min_observations, "approx", 0))
                 .dendrogram;
  }
  validate_dendrogram(dendro, &set.rows);

  ShiftBenchOptions options;
  options.repeats = a.repeats;
  options.stride = a.stride;
  const ShiftBenchReport report = bench_shift(dendro, set.rows, options);

  out << "merges timed: " << report.merges.size() << " (repeats " << report.repeats << ")\n";
  out << "exact median per merge: " << fmt(report.exact_median_seconds) << " s\n";
  out << "approx median per merge: " << fmt(report.approx_median_seconds) << " s\n";
  out << "speedup (median): " << fixed(report.median_speedup, 2) << "x\n";
  out << "speedup (total): " << fixed(report.total_speedup, 2) << "x\n";
  out << "mean absolute error: " << fmt(report.mean_absolute_error) << "\n";
  out << "pearson r: " << fmt(report.pearson_r) << "\n";

  if (!a.out.empty()) {
    const bool spread = report.repeats > 1;
    std::string csv = "iteration,exact,approx,exact_median_s,approx_median_s";
    if (spread) csv += ",exact_std_s,approx_std_s";
    csv += "\n";
    for (const ShiftTiming& t : report.merges) {
      csv += std::to_string(t.iteration) + "," + fmt(t.exact) + "," + fmt(t.approx) + "," +
             fmt(t.exact_median_seconds) + "," + fmt(t.approx_median_seconds);
      if (spread) {
        csv += "," + fmt(sample_stddev(t.exact_seconds)) + "," + fmt(sample_stddev(t.approx_seconds));
      }
      csv += "\n";
    }
    write_file(fs::path(a.out) / "bench_shift.csv", csv);
    json summary;
    summary["merges"] = report.merges.size();
    summary["repeats"] = report.repeats;
    summary["exact_median_seconds"] = report.exact_median_seconds;
    summary["approx_median_seconds"] = report.approx_median_seconds;
    summary["median_speedup"] = report.median_speedup;
    summary["total_speedup"] = report.total_speedup;
    summary["mean_absolute_error"] = report.mean_absolute_error;
    summary["pearson_r"] = report.pearson_r;
    write_file(fs::path(a.out) / "bench_summary.json", summary.dump(1) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  std::string input;
  std::string test;
  std::string format;
  std::string out;
  std::string mode = "weighted_all";
  double fraction = 0.05;
  std::size_t level = 0;
  double train_share = 0.8;
  std::uint64_t seed = 0;
  bool allow_label_violations = false;
};

struct LabeledRows {
  Matrix rows;
  std::vector<LabelId> classes;
};

std::vector<std::string> class_names(const EmbeddingSet& set, std::size_t level,
                                     const std::string& path) {
  if (!set.labels) throw_input(path + ": classification needs labeled embeddings");
  if (level >= set.labels->level_count()) {
    throw_usage("classify: --levels " + std::to_string(level) + " but '" + path + "' has " +
                std::to_string(set.labels->level_count()) + " label levels");
  }
  std::vector<std::string> names;
  for (LabelId id : set.labels->levels[level]) names.push_back(set.labels->vocab[level][id]);
  return names;
}

LabeledRows take_rows(const Matrix& rows, const std::vector<std::size_t>& idx,
                      const std::vector<LabelId>& classes) {
  LabeledRows out;
  out.rows = gather_rows(rows, idx);
  for (std::size_t i : idx) out.classes.push_back(classes[i]);
  return out;
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  ClassifyOptions options;
  if (a.mode == "weighted_all") {
    options.mode = DistanceMode::weighted_all;
  } else if (a.mode == "top_fraction") {
    options.mode = DistanceMode::top_fraction;
  } else {
    throw_usage("classify: unknown --mode '" + a.mode + "' (expected weighted_all|top_fraction)");
  }
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw_usage("classify: --fraction must be in (0, 1]");
  options.fraction = a.fraction;

  const EmbeddingSet train_set = load_input(a.input, a.format, a.allow_label_violations);
  std::map<std::string, LabelId> ids;
  std::vector<std::string> vocab;
  auto intern = [&](const std::vector<std::string>& names) {
    std::vector<LabelId> out_ids;
    for (const std::string& name : names) {
      auto [it, inserted] = ids.emplace(name, static_cast<LabelId>(vocab.size()));
      if (inserted) vocab.push_back(name);
      out_ids.push_back(it->second);
    }
    return out_ids;
  };
  const std::vector<LabelId> train_classes = intern(class_names(train_set, a.level, a.input));

  LabeledRows train, test;
  if (!a.test.empty()) {
    const EmbeddingSet test_set = load_input(a.test, a.format, a.allow_label_violations);
    if (test_set.d() != train_set.d()) {
      throw_input(a.test + ": dimension " + std::to_string(test_set.d()) +
                  " does not match training dimension " + std::to_string(train_set.d()));
    }
    train.rows = train_set.rows;
    train.classes = train_classes;
    test.rows = test_set.rows;
    test.classes = intern(class_names(test_set, a.level, a.test));
  } else {
    if (!(a.train_share > 0.0 && a.train_share < 1.0)) {
      throw_usage("classify: --train-share must be in (0, 1)");
    }
    std::map<LabelId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < train_classes.size(); ++i) by_class[train_classes[i]].push_back(i);
    Rng rng(a.seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& [cls, idx] : by_class) {
      for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
      const auto cut = static_cast<std::size_t>(
          std::ceil(a.train_share * static_cast<double>(idx.size())));
      for (std::size_t k = 0; k < idx.size(); ++k) (k < cut ? train_idx : test_idx).push_back(idx[k]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    if (test_idx.empty()) throw_usage("classify: split leaves no test rows");
    train = take_rows(train_set.rows, train_idx, train_classes);
    test = take_rows(train_set.rows, test_idx, train_classes);
  }

  const ClassModels models = train_class_sfs(train.rows, train.classes);
  std::vector<LabelId> predictions;
  predictions.reserve(test.classes.size());
  for (Eigen::Index r = 0; r < test.rows.rows(); ++r) {
    predictions.push_back(classify(test.rows.row(r).transpose(), models, options));
  }
  const MacroReport report = prf1_macro(predictions, test.classes);

  out << "classes: " << models.size() << ", train rows: " << train.classes.size()
      << ", test rows: " << test.classes.size() << ", mode: " << a.mode << "\n";
  out << "macro precision: " << fixed(report.precision) << "\n";
  out << "macro recall: " << fixed(report.recall) << "\n";
  out << "macro F1: " << fixed(report.f1) << "\n";

  if (!a.out.empty()) {
    std::string csv = "class,precision,recall,f1,support\n";
    json j;
    j["mode"] = a.mode;
    j["fraction"] = a.fraction;
    j["macro_precision"] = report.precision;
    j["macro_recall"] = report.recall;
    j["macro_f1"] = report.f1;
    json per = json::object();
    for (const auto& [cls, s] : report.per_class) {
      csv += vocab[cls] + "," + fmt(s.precision) + "," + fmt(s.recall) + "," + fmt(s.f1) + "," +
             std::to_string(s.support) + "\n";
      per[vocab[cls]] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                         {"support", s.support}};
    }
    j["per_class"] = std::move(per);
    write_file(fs::path(a.out) / "classify_per_class.csv", csv);
    write_file(fs::path(a.out) / "classify_report.json", j.dump(1) + "\n");
    std::string pred = "row,truth,predicted\n";
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      pred += std::to_string(i) + "," + vocab[test.classes[i]] + "," + vocab[predictions[i]] + "\n";
    }
    write_file(fs::path(a.out) / "classify_predictions.csv", pred);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// impurity

struct ImpurityArgs {
  std::string input;
  std::string format;
  std::string dendrogram;
  std::string out;
  std::string levels;
  std::size_t samples = 20;
  bool allow_label_violations = false;
};

int cmd_impurity(const ImpurityArgs& a, std::ostream& out) {
  const EmbeddingSet set = load_input(a.input, a.format, a.allow_label_violations);
  if (!set.labels) throw_input(a.input + ": impurity needs labeled embeddings");
  const Dendrogram dendro = load_dendrogram(a.dendrogram);
  if (dendro.n_leaves != set.n()) {
    throw_input(a.dendrogram + ": " + std::to_string(dendro.n_leaves) + " leaves but '" + a.input +
                "' has " + std::to_string(set.n()) + " rows");
  }
  std::vector<std::size_t> levels;
  if (a.levels.empty()) {
    levels.resize(set.labels->level_count());
    std::iota(levels.begin(), levels.end(), std::size_t{0});
  } else {
    levels = parse_size_list(a.levels, "--levels");
    for (std::size_t l : levels) {
      if (l >= set.labels->level_count()) {
        throw_usage("--levels: level " + std::to_string(l) + " out of range (have " +
                    std::to_string(set.labels->level_count()) + ")");
      }
    }
  }
  LabelHierarchy chosen;
  for (std::size_t l : levels) {
    chosen.levels.push_back(set.labels->levels[l]);
    chosen.vocab.push_back(set.labels->vocab[l]);
  }
  const std::vector<std::size_t> iterations =
      evenly_spaced_iterations(dendro.events.size(), a.samples);
  const ImpurityCurve curve = impurity_curve(dendro, chosen, iterations);

  std::string csv = "iteration";
  for (std::size_t l : levels) csv += ",lv" + std::to_string(l);
  csv += "\n";
  out << "iteration";
  for (std::size_t l : levels) out << "\tlv" << l;
  out << "\n";
  for (std::size_t s = 0; s < curve.iterations.size(); ++s) {
    csv += std::to_string(curve.iterations[s]);
    out << curve.iterations[s];
    for (std::size_t k = 0; k < levels.size(); ++k) {
      csv += "," + fmt(curve.per_level[k][s]);
      out << "\t" << fixed(curve.per_level[k][s]);
    }
    csv += "\n";
    out << "\n";
  }
  if (!a.out.empty()) write_file(fs::path(a.out) / "impurity.csv", csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// components

struct ComponentsArgs {
  std::string dendrogram;
  std::string out;
};

struct ComponentStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  double sum = 0.0;
  double log_sum = 0.0;
};

ComponentStats component_stats(const std::vector<double>& v) {
  ComponentStats s;
  s.mean = mean_of(v);
  s.median = median_of(v);
  s.stddev = sample_stddev(v);
  for (double x : v) {
    s.sum += x;
    s.log_sum += std::log1p(x);
  }
  return s;
}

int cmd_components(const ComponentsArgs& a, std::ostream& out) {
  const Dendrogram dendro = load_dendrogram(a.dendrogram);
  std::vector<double> dis, dc;
  for (const MergeEvent& ev : dendro.events) {
    if (!ev.exact) {
      throw_usage("components: dendrogram '" + a.dendrogram +
                  "' has no exact shift breakdown; rerun cluster with --shift exact or both");
    }
    dis.push_back(ev.exact->dis_sum);
    dc.push_back(ev.exact->dc_sum);
  }
  const ComponentStats s_dis = component_stats(dis);
  const ComponentStats s_dc = component_stats(dc);
  const double total = s_dis.sum + s_dc.sum;
  const double log_total = s_dis.log_sum + s_dc.log_sum;
  auto share = [](double part, double whole) { return whole > 0.0 ? 100.0 * part / whole : 0.0; };

  std::string csv = "component,mean,median,std,share,log_share\n";
  out << "component\tmean\tmedian\tstd\tshare%\tlog_share%\n";
  for (const auto& [name, s] : {std::pair{"dis", s_dis}, std::pair{"dc", s_dc}}) {
    const double sh = share(s.sum, total);
    const double lsh = share(s.log_sum, log_total);
    csv += std::string(name) + "," + fmt(s.mean) + "," + fmt(s.median) + "," + fmt(s.stddev) +
           "," + fmt(sh) + "," + fmt(lsh) + "\n";
    out << name << "\t" << fixed(s.mean) << "\t" << fixed(s.median) << "\t" << fixed(s.stddev)
        << "\t" << fixed(sh, 1) << "\t" << fixed(lsh, 1) << "\n";
  }
  if (!a.out.empty()) write_file(fs::path(a.out) / "components.csv", csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// param-study

struct ParamStudyArgs {
  std::string input;
  std::string column;
  std::string out;
  std::string multipliers;
  std::string windows;
  double alpha = kDefaultImbalanceAlpha;
  bool planted = false;
  std::uint64_t seed = 0;
};

// Reads one numeric column from a CSV with a header row. Without an explicit
// column name: `value` if present, else `exact` when every row has it, else
// `approx`.
std::vector<double> read_series(const std::string& path, const std::string& column) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  if (rows.size() < 2) throw_input(path + ": need a header and at least one row");
  const auto& header = rows.front();
  auto index_of = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  std::optional<std::size_t> col;
  if (!column.empty()) {
    col = index_of(column);
    if (!col) throw_usage("param-study: column '" + column + "' not found in " + path);
  } else if (auto v = index_of("value")) {
    col = v;
  } else if (auto e = index_of("exact")) {
    const bool full = std::all_of(rows.begin() + 1, rows.end(), [&](const auto& r) {
      return *e < r.size() && !r[*e].empty();
    });
    col = full ? e : index_of("approx");
  } else {
    col = index_of("approx");
  }
  if (!col) throw_input(path + ": no value, exact or approx column");
  std::vector<double> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (*col >= rows[r].size()) {
      throw_input(path + " line " + std::to_string(r + 1) + ": missing column " + header[*col]);
    }
    const std::string& f = rows[r][*col];
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
      throw_input(path + " line " + std::to_string(r + 1) + ": bad value '" + f + "'");
    }
    out.push_back(v);
  }
  return out;
}

SpikeTraceSpec default_planted_spec(std::uint64_t seed) {
  SpikeTraceSpec spec;
  spec.seed = seed;
  spec.spike_positions = evenly_spaced_positions(spec.length, 10);
  return spec;
}

int cmd_param_study(const ParamStudyArgs& a, std::ostream& out) {
  if (a.planted == !a.input.empty()) {
    throw_usage("param-study: give exactly one of --input or --planted");
  }
  const std::vector<double> multipliers =
      a.multipliers.empty() ? kStudyMultipliers : parse_double_list(a.multipliers, "--multipliers");
  const std::vector<std::size_t> windows =
      a.windows.empty() ? kStudyWindows : parse_size_list(a.windows, "--windows");
  const std::vector<double> series =
      a.planted ? planted_spike_trace(default_planted_spec(a.seed)) : read_series(a.input, a.column);

  std::string csv = "sdm,mws,segments,detected,cv,max_min,p90_p10\n";
  out << "sdm\tmws\tsegments\tdetected\tcv\tmax/min\tp90/p10\n";
  for (std::size_t w : windows) {
    for (double m : multipliers) {
      const SegmentationResult seg = segment_shifts(series, w, a.alpha, m);
      std::vector<double> detected;
      for (std::size_t i : seg.significant) detected.push_back(series[i]);
      std::string cv = "", mm = "", pp = "";
      if (detected.size() >= 2) {
        const UniformityMetrics u = uniformity_metrics(detected);
        cv = fmt(u.cv);
        mm = fmt(u.max_min_ratio);
        pp = fmt(u.p90_p10);
        out << fixed(m, 1) << "\t" << w << "\t" << seg.segments.size() << "\t" << detected.size()
            << "\t" << fixed(u.cv) << "\t" << fixed(u.max_min_ratio) << "\t" << fixed(u.p90_p10)
            << "\n";
      } else {
        out << fixed(m, 1) << "\t" << w << "\t" << seg.segments.size() << "\t" << detected.size()
            << "\t-\t-\t-\n";
      }
      csv += fmt(m) + "," + std::to_string(w) + "," + std::to_string(seg.segments.size()) + "," +
             std::to_string(detected.size()) + "," + cv + "," + mm + "," + pp + "\n";
    }
  }
  if (!a.out.empty()) write_file(fs::path(a.out) / "param_study.csv", csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string kind = "hierarchy";
  std::string out;
  std::string format;
  std::string branching = "3,3,3,3";
  std::size_t points_per_leaf = 5;
  std::optional<std::size_t> total_points;
  long dim = 64;
  std::string spread = "0.7,0.4,0.2";
  double jitter = 0.1;
  std::size_t length = 5000;
  std::size_t spikes = 10;
  double spike_sigma = 5.0;
  double baseline_mean = 1.0;
  double baseline_std = 0.4;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.kind == "hierarchy") {
    HierarchySpec spec;
    const auto b = parse_size_list(a.branching, "--branching");
    if (b.size() != 4) throw_usage("--branching: expected four factors");
    std::copy(b.begin(), b.end(), spec.branching.begin());
    const auto s = parse_double_list(a.spread, "--spread");
    if (s.size() != 3) throw_usage("--spread: expected three angles");
    std::copy(s.begin(), s.end(), spec.angular_spread.begin());
    spec.points_per_leaf = a.points_per_leaf;
    spec.total_points = a.total_points;
    spec.d = a.dim;
    spec.point_jitter = a.jitter;
    spec.seed = a.seed;
    const EmbeddingSet set = generate_hierarchy(spec);
    const EmbeddingFormat format =
        a.format.empty() ? infer_embedding_format(a.out) : parse_embedding_format(a.format);
    save_embeddings(set, a.out, format);
    out << "wrote " << set.n() << " x " << set.d() << " embeddings to " << a.out << "\n";
    return kExitOk;
  }
  if (a.kind == "spikes") {
    SpikeTraceSpec spec;
    spec.length = a.length;
    spec.baseline_mean = a.baseline_mean;
    spec.baseline_std = a.baseline_std;
    spec.spike_sigma_multiple = a.spike_sigma;
    spec.spike_positions = evenly_spaced_positions(a.length, a.spikes);
    spec.seed = a.seed;
    const std::vector<double> trace = planted_spike_trace(spec);
    std::vector<bool> is_spike(trace.size(), false);
    for (std::size_t p : spec.spike_positions) is_spike[p] = true;
    std::string csv = "index,value,is_spike\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
      csv += std::to_string(i) + "," + fmt(trace[i]) + "," + (is_spike[i] ? "1" : "0") + "\n";
    }
    write_file(a.out, csv);
    out << "wrote trace of length " << trace.size() << " with " << spec.spike_positions.size()
        << " spikes to " << a.out << "\n";
    return kExitOk;
  }
  throw_usage("synth: unknown --kind '" + a.kind + "' (expected hierarchy|spikes)");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::input: return kExitInput;
    case ErrorKind::numeric: return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace

std::size_t threads_from_env() {
  const char* raw = std::getenv("SAFARI_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  const std::string_view text(raw);
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw_usage("SAFARI_THREADS must be a nonnegative integer (got '" + std::string(text) + "')");
  }
  if (v == 0) return std::max(1u, std::thread::hardware_concurrency());
  return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical clustering with subspace-shift boundary detection", "safari"};
  app.footer(kExitCodeFooter);
  app.require_subcommand(1);

  ClusterArgs cluster;
  auto* c = app.add_subcommand("cluster", "Cluster embeddings and record per-merge shifts");
  c->add_option("--input", cluster.input, "Embedding file (.sfse, .csv or .jsonl)")->required();
  c->add_option("--format", cluster.format, "Input format: binary|csv|jsonl (default: by extension)");
  c->add_option("--out", cluster.out, "Output directory")->required();
  c->add_option("--window", cluster.window, "Sliding window size (>= 2)")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  c->add_option("--multiplier", cluster.multiplier, "Threshold standard-deviation multiplier")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c->add_option("--min-observations", cluster.min_observations,
                "Shifts observed before flagging starts (default max(2, ceil(window/4)))")
      ->check(CLI::PositiveNumber);
  c->add_option("--shift", cluster.shift, "Shift computation: exact|approx|both")
      ->check(CLI::IsMember({"exact", "approx", "both"}))
      ->capture_default_str();
  c->add_option("--seed", cluster.seed, "Seed recorded in the run configuration")->capture_default_str();
  c->add_flag("--allow-label-violations", cluster.allow_label_violations,
              "Accept labels that do not nest across levels");
  c->footer(kExitCodeFooter);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench-shift", "Time exact against approximate shifts over a merge sequence");
  b->add_option("--input", bench.input, "Embedding file the dendrogram was built from");
  b->add_option("--format", bench.format, "Input format: binary|csv|jsonl (default: by extension)");
  b->add_option("--dendrogram", bench.dendrogram, "Dendrogram JSON (default: cluster the input first)");
  b->add_option("--trace", bench.trace,
                "Trace CSV with both exact and approx columns; compares values without timing");
  b->add_option("--out", bench.out, "Output directory for CSV and JSON reports");
  b->add_option("--repeats", bench.repeats, "Timed repeats per merge (median reported)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b->add_option("--stride", bench.stride, "Time every k-th merge")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b->add_option("--window", bench.window, "Window size when clustering the input")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  b->add_option("--multiplier", bench.multiplier, "Multiplier when clustering the input")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  b->add_option("--min-observations", bench.min_observations, "Warm-up when clustering the input")
      ->check(CLI::PositiveNumber);
  b->footer(kExitCodeFooter);

  ClassifyArgs classify_args;
  auto* k = app.add_subcommand("classify", "Nearest-subspace classification with one subspace per class");
  k->add_option("--input", classify_args.input, "Labeled training embeddings")->required();
  k->add_option("--test", classify_args.test, "Labeled test embeddings (default: split --input)");
  k->add_option("--format", classify_args.format, "Input format: binary|csv|jsonl (default: by extension)");
  k->add_option("--out", classify_args.out, "Output directory for reports");
  k->add_option("--mode", classify_args.mode, "Distance mode: weighted_all|top_fraction")
      ->check(CLI::IsMember({"weighted_all", "top_fraction"}))
      ->capture_default_str();
  k->add_option("--fraction", classify_args.fraction, "Basis share used by top_fraction")
      ->capture_default_str();
  k->add_option("--levels", classify_args.level, "Label level used as the class")->capture_default_str();
  k->add_option("--train-share", classify_args.train_share, "Per-class training share when splitting")
      ->capture_default_str();
  k->add_option("--seed", classify_args.seed, "Seed for the train/test split")->capture_default_str();
  k->add_flag("--allow-label-violations", classify_args.allow_label_violations,
              "Accept labels that do not nest across levels");
  k->footer(kExitCodeFooter);

  ImpurityArgs imp;
  auto* i = app.add_subcommand("impurity", "Per-level impurity along a dendrogram");
  i->add_option("--input", imp.input, "Labeled embeddings the dendrogram was built from")->required();
  i->add_option("--format", imp.format, "Input format: binary|csv|jsonl (default: by extension)");
  i->add_option("--dendrogram", imp.dendrogram, "Dendrogram JSON")->required();
  i->add_option("--out", imp.out, "Output directory for impurity.csv");
  i->add_option("--levels", imp.levels, "Comma-separated label levels (default: all)");
  i->add_option("--samples", imp.samples, "Evenly spaced iterations to evaluate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  i->add_flag("--allow-label-violations", imp.allow_label_violations,
              "Accept labels that do not nest across levels");
  i->footer(kExitCodeFooter);

  ComponentsArgs comp;
  auto* m = app.add_subcommand("components", "DIS and DC contributions to the exact shift");
  m->add_option("--dendrogram", comp.dendrogram, "Dendrogram JSON built with exact shifts")->required();
  m->add_option("--out", comp.out, "Output directory for components.csv");
  m->footer(kExitCodeFooter);

  ParamStudyArgs study;
  auto* p = app.add_subcommand("param-study", "Sweep multiplier and minimum window of offline detection");
  p->add_option("--input", study.input, "CSV with a value, exact or approx column");
  p->add_option("--column", study.column, "Column to read from --input");
  p->add_flag("--planted", study.planted,
              "Use a planted trace (length 5000, 10 spikes at 5 sigma) instead of --input");
  p->add_option("--seed", study.seed, "Seed for --planted")->capture_default_str();
  p->add_option("--multipliers", study.multipliers, "Comma-separated multipliers (default 0.5..3.0)");
  p->add_option("--windows", study.windows, "Comma-separated minimum windows (default 50,100,200)");
  p->add_option("--alpha", study.alpha, "Split imbalance in pooled standard deviations")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  p->add_option("--out", study.out, "Output directory for param_study.csv");
  p->footer(kExitCodeFooter);

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Generate synthetic hierarchical embeddings or spike traces");
  s->add_option("--kind", syn.kind, "hierarchy|spikes")
      ->check(CLI::IsMember({"hierarchy", "spikes"}))
      ->capture_default_str();
  s->add_option("--out", syn.out, "Output file")->required();
  s->add_option("--format", syn.format, "Embedding format: binary|csv|jsonl (default: by extension)");
  s->add_option("--branching", syn.branching, "Children per level, coarse to fine")->capture_default_str();
  s->add_option("--points-per-leaf", syn.points_per_leaf, "Points per leaf")->capture_default_str();
  s->add_option("--total-points", syn.total_points, "Total points dealt round-robin over leaves");
  s->add_option("--dim", syn.dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--spread", syn.spread, "Angles (radians) of the three child levels")->capture_default_str();
  s->add_option("--jitter", syn.jitter, "Per-point Gaussian jitter scale")->capture_default_str();
  s->add_option("--length", syn.length, "Trace length")->capture_default_str();
  s->add_option("--spikes", syn.spikes, "Evenly spaced spike count")->capture_default_str();
  s->add_option("--spike-sigma", syn.spike_sigma, "Spike height in baseline standard deviations")
      ->capture_default_str();
  s->add_option("--baseline-mean", syn.baseline_mean, "Baseline mean")->capture_default_str();
  s->add_option("--baseline-std", syn.baseline_std, "Baseline standard deviation")->capture_default_str();
  s->add_option("--seed", syn.seed, "Generator seed")->capture_default_str();
  s->footer(kExitCodeFooter);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*c) return cmd_cluster(cluster, out);
    if (*b) return cmd_bench_shift(bench, out);
    if (*k) return cmd_classify(classify_args, out);
    if (*i) return cmd_impurity(imp, out);
    if (*m) return cmd_components(comp, out);
    if (*p) return cmd_param_study(study, out);
    if (*s) return cmd_synth(syn, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace safari::cli
