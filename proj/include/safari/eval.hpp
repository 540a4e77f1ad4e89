#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "safari/embedding_set.hpp"
#include "safari/engine.hpp"
#include "safari/sfs.hpp"

namespace safari {

/// Mean over label classes of 1 - (largest share of the class inside a single
/// cluster). 0 means every class sits wholly inside one cluster.
double impurity(std::span<const ClusterId> assignment, std::span<const LabelId> labels);

struct ImpurityCurve {
  std::vector<std::size_t> iterations;
  std::vector<std::vector<double>> per_level;  // [level][sample]
};

/// Impurity at each level after cutting the dendrogram at every listed
/// iteration (0 = all singletons, n - 1 = one cluster).
ImpurityCurve impurity_curve(const Dendrogram& dendrogram, const LabelHierarchy& hierarchy,
                             std::span<const std::size_t> sample_iterations);

/// `count` iterations spread evenly over [0, n_merges], both ends included.
std::vector<std::size_t> evenly_spaced_iterations(std::size_t n_merges, std::size_t count);

using ClassModels = std::map<LabelId, SemanticFieldSubspace>;

/// One subspace per class, built from that class's training rows.
ClassModels train_class_sfs(const Matrix& train, std::span<const LabelId> classes);

enum class DistanceMode { weighted_all, top_fraction };

struct ClassifyOptions {
  DistanceMode mode = DistanceMode::weighted_all;
  double fraction = 0.05;
};

/// Weighted basis distance sum_i w_i * d_sem(x, v_i). weighted_all weighs
/// every basis row by sigma_i / sum(sigma); top_fraction keeps the top
/// ceil(f * k) rows with equal weights.
double subspace_distance(VectorRef x, const SemanticFieldSubspace& s,
                         const ClassifyOptions& options);

/// Class of the nearest subspace; ties go to the lowest class id.
LabelId classify(VectorRef x, const ClassModels& models, const ClassifyOptions& options = {});

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MacroReport {
  std::map<LabelId, ClassScores> per_class;  // classes present in truths
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

MacroReport prf1_macro(std::span<const LabelId> predictions, std::span<const LabelId> truths);

/// Sample Pearson correlation. Throws on constant input.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace safari
