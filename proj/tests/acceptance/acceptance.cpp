// End-to-end acceptance checks. One line per criterion; nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "safari/bench.hpp"
#include "safari/engine.hpp"
#include "safari/eval.hpp"
#include "safari/io.hpp"
#include "safari/sfs.hpp"
#include "safari/synth.hpp"
#include "safari/thresholding.hpp"

using namespace safari;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

Eigen::Index draw(Rng& rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

Matrix normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

// 1. Singular-value perturbation bound on 1,000 random pairs.
Outcome weyl_bound() {
  const auto start = Clock::now();
  Rng rng(1);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index d = draw(rng, 1, 32);
    const Matrix a_x = normal_matrix(rng, draw(rng, 1, 64), d);
    const Matrix a_y = normal_matrix(rng, draw(rng, 1, 16), d);
    const WeylReport r = verify_weyl_bound(a_x, a_y);
    // Bound against an independent reference norm as well.
    const double norm_y = oracle::jacobi_svd(a_y).sigma.front();
    for (double gap : r.per_index_gaps) {
      worst = std::max(worst, gap - norm_y);
      if (gap > norm_y + 1e-9) ++failures;
    }
    if (!r.holds(1e-9)) ++failures;
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < 30.0,
          "max(gap - ||A_y||) = " + num(worst) + " (<= 1e-9), violations " +
              std::to_string(failures) + ", " + num(elapsed, 3) + " s (< 30 s)"};
}

// 2. Exact shift of a subspace against itself.
Outcome zero_shift() {
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SemanticFieldSubspace s =
        build_sfs(normal_matrix(rng, draw(rng, 1, 40), draw(rng, 1, 32)));
    worst = std::max(worst, semantic_shift_exact(s, s).total);
  }
  return {worst <= 1e-9, "max total over 100 subspaces = " + num(worst) + " (<= 1e-9)"};
}

// 3. Exact and approximate traces correlate on hierarchical data.
Outcome shift_correlation() {
  const auto start = Clock::now();
  HierarchySpec spec;
  spec.total_points = 500;
  spec.d = 64;
  spec.seed = 3;
  SafariConfig config;
  config.shift_mode = ShiftMode::both;
  const SafariResult r = run_safari(generate_hierarchy(spec), config);
  std::vector<double> exact, approx;
  for (const ShiftRecord& s : r.shift_trace) {
    exact.push_back(*s.exact);
    approx.push_back(*s.approx);
  }
  const double rho = pearson(exact, approx);
  const double elapsed = seconds_since(start);
  return {rho >= 0.6 && elapsed < 300.0,
          "Pearson r = " + num(rho) + " (>= 0.6) over " + std::to_string(exact.size()) +
              " merges, " + num(elapsed, 3) + " s (< 300 s)"};
}

// 4. Per-merge timing of approximate against exact shifts.
Outcome speedup() {
  HierarchySpec spec;
  spec.total_points = 2000;
  spec.d = 256;
  spec.seed = 4;
  const EmbeddingSet set = generate_hierarchy(spec);
  const Dendrogram d = run_safari(set, SafariConfig{}).dendrogram;
  ShiftBenchOptions options;
  options.repeats = 3;
  const ShiftBenchReport r = bench_shift(d, set.rows, options);
  const bool pass = r.approx_median_seconds * 5.0 <= r.exact_median_seconds;
  return {pass, "median exact " + num(r.exact_median_seconds) + " s, approx " +
                    num(r.approx_median_seconds) + " s, median ratio " + num(r.median_speedup, 3) +
                    "x (>= 5x), total ratio " + num(r.total_speedup, 3) + "x, " +
                    std::to_string(r.merges.size()) + " merges"};
}

// 5. Impurity ordering across label levels.
Outcome impurity_ordering() {
  HierarchySpec spec;
  spec.seed = 5;
  const EmbeddingSet set = generate_hierarchy(spec);
  const Dendrogram d = run_safari(set, SafariConfig{}).dendrogram;
  const std::vector<std::size_t> its = evenly_spaced_iterations(d.events.size(), 20);
  const ImpurityCurve c = impurity_curve(d, *set.labels, its);
  std::size_t ordered = 0;
  for (std::size_t s = 0; s < its.size(); ++s) {
    bool ok = true;
    for (std::size_t k = 0; k + 1 < 4; ++k) ok = ok && c.per_level[k][s] >= c.per_level[k + 1][s];
    ordered += ok ? 1 : 0;
  }
  bool ends = true;
  std::string first = "iteration 0:", last = "final:";
  for (std::size_t k = 0; k < 4; ++k) {
    ends = ends && c.per_level[k].front() >= c.per_level[k].back();
    first += " Lv" + std::to_string(k) + "=" + num(c.per_level[k].front(), 3);
    last += " Lv" + std::to_string(k) + "=" + num(c.per_level[k].back(), 3);
  }
  const double share = static_cast<double>(ordered) / static_cast<double>(its.size());
  return {share >= 0.95 && ends, "ordered at " + std::to_string(ordered) + "/" +
                                     std::to_string(its.size()) + " samples (>= 95%), " + first +
                                     "; " + last};
}

// 6. Nearest-subspace classification on five separated classes.
Outcome classification() {
  HierarchySpec spec;
  spec.branching = {5, 1, 1, 1};
  spec.points_per_leaf = 250;
  spec.d = 64;
  spec.angular_spread = {0.0, 0.0, 0.0};
  spec.point_jitter = 0.5;
  spec.seed = 6;
  const EmbeddingSet set = generate_hierarchy(spec);
  const std::vector<LabelId>& cls = set.labels->levels[3];

  std::map<LabelId, std::size_t> seen;
  std::vector<std::size_t> train_idx, test_idx;
  std::vector<LabelId> train_cls, test_cls;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (seen[cls[i]]++ < 200) {
      train_idx.push_back(i);
      train_cls.push_back(cls[i]);
    } else {
      test_idx.push_back(i);
      test_cls.push_back(cls[i]);
    }
  }
  const ClassModels models = train_class_sfs(gather_rows(set.rows, train_idx), train_cls);

  double min_angle = 180.0;
  for (auto a = models.begin(); a != models.end(); ++a) {
    for (auto b = std::next(a); b != models.end(); ++b) {
      const double c = std::abs(a->second.basis.row(0).dot(b->second.basis.row(0)));
      min_angle = std::min(min_angle, std::acos(std::min(1.0, c)) * 180.0 / std::numbers::pi);
    }
  }

  // Classes whose canonical leading direction points away from their own data.
  std::size_t reversed = 0;
  for (const auto& [label, s] : models) {
    Vector mean = Vector::Zero(spec.d);
    for (std::size_t j = 0; j < train_idx.size(); ++j) {
      if (train_cls[j] == label) mean += set.rows.row(static_cast<Eigen::Index>(train_idx[j])).transpose();
    }
    if (s.basis.row(0).dot(mean) < 0.0) ++reversed;
  }

  auto macro_f1 = [&](const ClassifyOptions& options) {
    std::vector<LabelId> predicted;
    for (std::size_t i : test_idx) {
      predicted.push_back(classify(set.rows.row(static_cast<Eigen::Index>(i)).transpose(), models,
                                   options));
    }
    return prf1_macro(predicted, test_cls).f1;
  };
  const double f_all = macro_f1({DistanceMode::weighted_all, 0.05});
  const double f_top = macro_f1({DistanceMode::top_fraction, 0.05});
  return {min_angle >= 60.0 && f_all >= 0.95 && f_top >= 0.90,
          "weighted_all F1 = " + num(f_all) + " (>= 0.95), top_fraction(0.05) F1 = " +
              num(f_top) + " (>= 0.90), min leading-direction angle " + num(min_angle, 3) +
              " deg (>= 60), " + std::to_string(train_idx.size()) + " train / " +
              std::to_string(test_idx.size()) + " test, " + std::to_string(reversed) +
              " class(es) with leading direction opposed to the class mean"};
}

SpikeTraceSpec planted_spec() {
  SpikeTraceSpec spec;
  spec.length = 5000;
  spec.spike_positions = evenly_spaced_positions(spec.length, 10);
  spec.spike_sigma_multiple = 5.0;
  return spec;
}

// 7. Online detection of planted spikes.
Outcome spike_detection() {
  const SpikeTraceSpec spec = planted_spec();
  const std::vector<double> trace = planted_spike_trace(spec);
  SlidingWindowTracker tracker(100, 3.0);
  std::size_t hits = 0, false_flags = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool flag = tracker.is_significant(trace[i]);
    tracker.observe(trace[i]);
    const bool spike = std::find(spec.spike_positions.begin(), spec.spike_positions.end(), i) !=
                       spec.spike_positions.end();
    if (flag && spike) ++hits;
    if (flag && !spike) ++false_flags;
  }
  const double fpr = static_cast<double>(false_flags) /
                     static_cast<double>(trace.size() - spec.spike_positions.size());
  return {hits == 10 && fpr <= 0.01, "spikes flagged " + std::to_string(hits) +
                                         "/10, false-positive rate " + num(fpr) + " (" +
                                         std::to_string(false_flags) + " flags, <= 1%)"};
}

// 8. Uniformity of detected values across multipliers.
Outcome cv_trend() {
  const std::vector<double> trace = planted_spike_trace(planted_spec());
  auto cv_at = [&](double m, std::size_t w) {
    const SegmentationResult seg = segment_shifts(trace, w, kDefaultImbalanceAlpha, m);
    std::vector<double> detected;
    for (std::size_t i : seg.significant) detected.push_back(trace[i]);
    return uniformity_metrics(detected).cv;
  };
  const double cv1 = cv_at(1.0, 100);
  const double cv3 = cv_at(3.0, 100);
  std::string others;
  for (std::size_t w : {50, 200}) {
    others += ", MWS " + std::to_string(w) + ": " + num(cv_at(3.0, w)) + " vs " + num(cv_at(1.0, w));
  }
  return {cv3 < cv1, "MWS 100: CV(SDM 3.0) = " + num(cv3) + " < CV(SDM 1.0) = " + num(cv1) +
                         " (info" + others + ")"};
}

// 9. Heap-driven and exhaustive-scan merge sequences agree.
Outcome oracle_equivalence() {
  std::size_t mismatched = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    Matrix rows;
    if (t % 2 == 0) {
      Rng rng(900 + t);
      rows = normal_matrix(rng, 20 + static_cast<Eigen::Index>(9 * t), 4 + static_cast<Eigen::Index>(t % 7));
    } else {
      HierarchySpec spec;
      spec.total_points = 30 + 8 * t;
      spec.d = 16;
      spec.seed = t;
      rows = generate_hierarchy(spec).rows;
    }
    if (t % 5 == 0) {
      // Exact duplicates create distance ties.
      for (Eigen::Index r = 1; r < rows.rows(); r += 7) rows.row(r) = rows.row(r - 1);
    }
    SafariConfig config;
    HeapPairFinder heap;
    oracle::NaivePairFinder naive;
    const Dendrogram a = run_safari(rows, config, heap).dendrogram;
    const Dendrogram b = run_safari(rows, config, naive).dendrogram;
    bool same = a.events.size() == b.events.size();
    for (std::size_t i = 0; same && i < a.events.size(); ++i) {
      const MergeEvent& x = a.events[i];
      const MergeEvent& y = b.events[i];
      const double gap = std::abs(x.linkage_distance - y.linkage_distance);
      worst = std::max(worst, gap);
      same = x.left_id == y.left_id && x.right_id == y.right_id && x.new_id == y.new_id &&
             gap <= 1e-12;
    }
    mismatched += same ? 0 : 1;
  }
  return {mismatched == 0, "datasets with differing sequences " + std::to_string(mismatched) +
                               "/20, max distance gap " + num(worst)};
}

// 10. Two CLI runs produce identical bytes.
Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "safari_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = SAFARI_BIN;
  const std::string input = (dir / "h.sfse").string();
  auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null").c_str()); };
  if (sh(bin + " synth --out " + input + " --total-points 300 --dim 32 --seed 10") != 0) {
    return {false, "synth failed"};
  }
  for (const char* run : {"a", "b"}) {
    if (sh(bin + " cluster --input " + input + " --window 50 --multiplier 3 --shift both --seed 7 --out " +
           (dir / run).string()) != 0) {
      return {false, "cluster run failed"};
    }
  }
  bool same = true;
  for (const char* f : {"dendrogram.json", "trace.csv", "sfs_registry.json"}) {
    same = same && read_file(dir / "a" / f) == read_file(dir / "b" / f);
  }
  const std::string digest = sha256_hex(read_file(dir / "a" / "dendrogram.json"));
  return {same, std::string(same ? "byte-identical" : "outputs differ") +
                    " dendrogram.json, trace.csv, sfs_registry.json (file sha256 " +
                    digest.substr(0, 16) + "...)"};
}

// 11. Factorization quality and spectral norm agreement.
Outcome svd_quality() {
  Rng rng(11);
  double worst_residual = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = draw(rng, 1, 128);
    const Eigen::Index d = draw(rng, 1, 128);
    Matrix m;
    if (trial % 4 == 3) {
      // Rank-deficient product.
      const Eigen::Index k = draw(rng, 1, std::min(n, d));
      m = normal_matrix(rng, n, k) * normal_matrix(rng, k, d);
    } else {
      m = normal_matrix(rng, n, d);
    }
    const SvdResult r = svd(m, kDefaultRankTolerance, true);
    const Matrix rebuilt = *r.left_factors * r.singular_values.asDiagonal() * r.right_basis;
    worst_residual = std::max(worst_residual, (m - rebuilt).norm() / m.norm());
    const double top = r.singular_values[0];
    worst_norm = std::max(worst_norm, std::abs(spectral_norm(m) - top) / top);
  }
  return {worst_residual <= 1e-6 && worst_norm <= 1e-8,
          "max relative residual " + num(worst_residual) + " (<= 1e-6), max spectral norm error " +
              num(worst_norm) + " (<= 1e-8) over 1000 matrices up to 128x128"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"singular-value perturbation bound", weyl_bound},
      {"zero-shift identity", zero_shift},
      {"exact/approximate correlation", shift_correlation},
      {"approximate shift speedup", speedup},
      {"impurity level ordering", impurity_ordering},
      {"nearest-subspace classification", classification},
      {"planted spike detection", spike_detection},
      {"multiplier CV trend", cv_trend},
      {"pair-finder oracle equivalence", oracle_equivalence},
      {"cluster determinism", cli_determinism},
      {"SVD quality", svd_quality},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
