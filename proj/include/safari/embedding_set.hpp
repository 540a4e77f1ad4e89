#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safari/linalg.hpp"

namespace safari {

using LabelId = std::uint32_t;

/// Multi-level labels, level 0 most specific. Level k+1 must coarsen level k.
struct LabelHierarchy {
  std::vector<std::vector<LabelId>> levels;        // [level][item]
  std::vector<std::vector<std::string>> vocab;     // [level][label id]

  std::size_t level_count() const { return levels.size(); }
  std::size_t item_count() const { return levels.empty() ? 0 : levels.front().size(); }
};

struct CoarseningViolation {
  std::size_t level;        // finer level k; the violation is against k + 1
  LabelId fine_label;
  LabelId first_coarse;
  LabelId second_coarse;
  std::string message;
};

/// Every item having a label at every level, ids within vocab range, and each
/// fine label mapping to exactly one coarse label. Returns all coarsening
/// violations; shape errors throw.
std::vector<CoarseningViolation> check_hierarchy(const LabelHierarchy& h);

/// Builds a LabelHierarchy from string labels per item ([item][level]),
/// assigning ids per level in order of first appearance.
LabelHierarchy hierarchy_from_strings(const std::vector<std::vector<std::string>>& labels);

struct EmbeddingSet {
  Matrix rows;
  std::optional<std::vector<std::string>> ids;
  std::optional<LabelHierarchy> labels;

  std::size_t n() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Structural checks shared by every loader: finite, nonzero rows, unique ids,
/// labels covering all rows. Coarsening violations throw unless
/// `allow_label_violations` is set.
void validate_embedding_set(const EmbeddingSet& set, bool allow_label_violations = false);

}  // namespace safari
