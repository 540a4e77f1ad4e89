#include "safari/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "safari/error.hpp"

namespace safari {

double impurity(std::span<const ClusterId> assignment, std::span<const LabelId> labels) {
  if (assignment.size() != labels.size()) {
    throw_usage("impurity: " + std::to_string(labels.size()) + " labels for " +
                std::to_string(assignment.size()) + " assigned items");
  }
  if (labels.empty()) throw_usage("impurity: no labeled items");

  // class -> (cluster -> count)
  std::map<LabelId, std::unordered_map<ClusterId, std::size_t>> counts;
  std::map<LabelId, std::size_t> class_sizes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++counts[labels[i]][assignment[i]];
    ++class_sizes[labels[i]];
  }
  double sum = 0.0;
  for (const auto& [label, per_cluster] : counts) {
    std::size_t best = 0;
    for (const auto& [cluster, c] : per_cluster) best = std::max(best, c);
    sum += 1.0 - static_cast<double>(best) / static_cast<double>(class_sizes[label]);
  }
  return sum / static_cast<double>(counts.size());
}

ImpurityCurve impurity_curve(const Dendrogram& dendrogram, const LabelHierarchy& hierarchy,
                             std::span<const std::size_t> sample_iterations) {
  if (hierarchy.item_count() != dendrogram.n_leaves) {
    throw_usage("impurity_curve: hierarchy covers " + std::to_string(hierarchy.item_count()) +
                " items but the dendrogram has " + std::to_string(dendrogram.n_leaves) +
                " leaves");
  }
  ImpurityCurve curve;
  curve.per_level.assign(hierarchy.level_count(), {});
  for (std::size_t it : sample_iterations) {
    if (it > dendrogram.events.size()) {
      throw_usage("impurity_curve: iteration " + std::to_string(it) + " out of range [0, " +
                  std::to_string(dendrogram.events.size()) + "]");
    }
    const std::vector<ClusterId> assignment = cut_dendrogram(dendrogram, it);
    curve.iterations.push_back(it);
    for (std::size_t k = 0; k < hierarchy.level_count(); ++k) {
      curve.per_level[k].push_back(impurity(assignment, hierarchy.levels[k]));
    }
  }
  return curve;
}

std::vector<std::size_t> evenly_spaced_iterations(std::size_t n_merges, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {0};
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t it = (s * n_merges + (count - 1) / 2) / (count - 1);
    if (out.empty() || out.back() != it) out.push_back(it);
  }
  return out;
}

ClassModels train_class_sfs(const Matrix& train, std::span<const LabelId> classes) {
  if (static_cast<std::size_t>(train.rows()) != classes.size()) {
    throw_usage("train_class_sfs: " + std::to_string(classes.size()) + " labels for " +
                std::to_string(train.rows()) + " rows");
  }
  if (classes.empty()) throw_usage("train_class_sfs: no training rows");
  std::map<LabelId, std::vector<std::size_t>> rows_by_class;
  for (std::size_t i = 0; i < classes.size(); ++i) rows_by_class[classes[i]].push_back(i);

  ClassModels models;
  for (const auto& [label, idx] : rows_by_class) {
    SemanticFieldSubspace s = build_sfs(gather_rows(train, idx));
    if (s.rank() == 0) {
      throw_numeric("train_class_sfs: class " + std::to_string(label) + " spans no subspace");
    }
    s.source_cluster_id = label;
    models.emplace(label, std::move(s));
  }
  return models;
}

double subspace_distance(VectorRef x, const SemanticFieldSubspace& s,
                         const ClassifyOptions& options) {
  const Eigen::Index k = s.rank();
  if (k == 0) throw_usage("subspace_distance: empty subspace");
  if (x.size() != s.dim()) {
    throw_usage("subspace_distance: vector dimension " + std::to_string(x.size()) +
                " does not match subspace dimension " + std::to_string(s.dim()));
  }
  double dist = 0.0;
  if (options.mode == DistanceMode::weighted_all) {
    const double total = s.singular_values.sum();
    for (Eigen::Index i = 0; i < k; ++i) {
      dist += (s.singular_values[i] / total) *
              semantic_distance(x, s.basis.row(i).transpose());
    }
  } else {
    if (!(options.fraction > 0.0 && options.fraction <= 1.0)) {
      throw_usage("subspace_distance: fraction must lie in (0, 1]");
    }
    const auto top = std::min<Eigen::Index>(
        k, static_cast<Eigen::Index>(std::ceil(options.fraction * static_cast<double>(k))));
    const auto used = std::max<Eigen::Index>(1, top);
    for (Eigen::Index i = 0; i < used; ++i) {
      dist += semantic_distance(x, s.basis.row(i).transpose());
    }
    dist /= static_cast<double>(used);
  }
  return dist;
}

LabelId classify(VectorRef x, const ClassModels& models, const ClassifyOptions& options) {
  if (models.empty()) throw_usage("classify: no class models");
  if (!(x.norm() > 0.0)) throw_numeric("classify: zero-norm input");
  LabelId best_label = models.begin()->first;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [label, s] : models) {  // ascending ids; strict < keeps the lowest
    const double d = subspace_distance(x, s, options);
    if (d < best) {
      best = d;
      best_label = label;
    }
  }
  return best_label;
}

MacroReport prf1_macro(std::span<const LabelId> predictions, std::span<const LabelId> truths) {
  if (predictions.size() != truths.size()) {
    throw_usage("prf1_macro: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(truths.size()) + " truths");
  }
  if (truths.empty()) throw_usage("prf1_macro: empty inputs");

  std::map<LabelId, std::size_t> tp, predicted, actual;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++actual[truths[i]];
    ++predicted[predictions[i]];
    if (predictions[i] == truths[i]) ++tp[truths[i]];
  }
  MacroReport report;
  for (const auto& [label, support] : actual) {
    ClassScores s;
    s.support = support;
    const double hits = static_cast<double>(tp[label]);
    const std::size_t pred = predicted.count(label) ? predicted[label] : 0;
    s.precision = pred > 0 ? hits / static_cast<double>(pred) : 0.0;
    s.recall = hits / static_cast<double>(support);
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    report.precision += s.precision;
    report.recall += s.recall;
    report.f1 += s.f1;
    report.per_class.emplace(label, s);
  }
  const auto classes = static_cast<double>(report.per_class.size());
  report.precision /= classes;
  report.recall /= classes;
  report.f1 /= classes;
  return report;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw_usage("pearson: series lengths differ");
  if (a.size() < 2) throw_usage("pearson: need at least two points");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw_numeric("pearson: undefined for a constant series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace safari
