#include "safari/embedding_set.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "safari/error.hpp"

namespace safari {

std::vector<CoarseningViolation> check_hierarchy(const LabelHierarchy& h) {
  if (h.vocab.size() != h.levels.size()) {
    throw_input("label hierarchy: vocabulary count does not match level count");
  }
  const std::size_t n = h.item_count();
  for (std::size_t k = 0; k < h.levels.size(); ++k) {
    if (h.levels[k].size() != n) {
      throw_input("label hierarchy: level " + std::to_string(k) + " labels " +
                  std::to_string(h.levels[k].size()) + " items, expected " +
                  std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (h.levels[k][i] >= h.vocab[k].size()) {
        throw_input("label hierarchy: item " + std::to_string(i) + " level " +
                    std::to_string(k) + " label id " + std::to_string(h.levels[k][i]) +
                    " outside vocabulary");
      }
    }
  }

  std::vector<CoarseningViolation> violations;
  for (std::size_t k = 0; k + 1 < h.levels.size(); ++k) {
    std::unordered_map<LabelId, LabelId> parent;
    std::unordered_set<LabelId> reported;
    for (std::size_t i = 0; i < n; ++i) {
      const LabelId fine = h.levels[k][i];
      const LabelId coarse = h.levels[k + 1][i];
      auto [it, inserted] = parent.emplace(fine, coarse);
      if (!inserted && it->second != coarse && reported.insert(fine).second) {
        violations.push_back(
            {k, fine, it->second, coarse,
             "label '" + h.vocab[k][fine] + "' at level " + std::to_string(k) +
                 " maps to both '" + h.vocab[k + 1][it->second] + "' and '" +
                 h.vocab[k + 1][coarse] + "' at level " + std::to_string(k + 1) +
                 " (first conflict at item " + std::to_string(i) + ")"});
      }
    }
  }
  return violations;
}

LabelHierarchy hierarchy_from_strings(const std::vector<std::vector<std::string>>& labels) {
  LabelHierarchy h;
  if (labels.empty()) return h;
  const std::size_t levels = labels.front().size();
  h.levels.assign(levels, std::vector<LabelId>(labels.size()));
  h.vocab.assign(levels, {});
  std::vector<std::unordered_map<std::string, LabelId>> index(levels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != levels) {
      throw_input("item " + std::to_string(i) + " has " + std::to_string(labels[i].size()) +
                  " label levels, expected " + std::to_string(levels));
    }
    for (std::size_t k = 0; k < levels; ++k) {
      auto [it, inserted] =
          index[k].emplace(labels[i][k], static_cast<LabelId>(h.vocab[k].size()));
      if (inserted) h.vocab[k].push_back(labels[i][k]);
      h.levels[k][i] = it->second;
    }
  }
  return h;
}

void validate_embedding_set(const EmbeddingSet& set, bool allow_label_violations) {
  if (set.rows.rows() < 1 || set.rows.cols() < 1) {
    throw_input("embedding set is empty");
  }
  for (Eigen::Index r = 0; r < set.rows.rows(); ++r) {
    if (!set.rows.row(r).allFinite()) {
      throw_input("row " + std::to_string(r) + ": non-finite value");
    }
    if (!(set.rows.row(r).squaredNorm() > 0.0)) {
      throw_input("row " + std::to_string(r) + ": zero-norm embedding");
    }
  }
  if (set.ids) {
    if (set.ids->size() != set.n()) {
      throw_input("id count " + std::to_string(set.ids->size()) + " does not match " +
                  std::to_string(set.n()) + " rows");
    }
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < set.ids->size(); ++i) {
      auto [it, inserted] = seen.emplace((*set.ids)[i], i);
      if (!inserted) {
        throw_input("row " + std::to_string(i) + ": duplicate id '" + (*set.ids)[i] +
                    "' (first seen at row " + std::to_string(it->second) + ")");
      }
    }
  }
  if (set.labels) {
    if (set.labels->level_count() > 0 && set.labels->item_count() != set.n()) {
      throw_input("labels cover " + std::to_string(set.labels->item_count()) +
                  " items, expected " + std::to_string(set.n()));
    }
    const auto violations = check_hierarchy(*set.labels);
    if (!violations.empty() && !allow_label_violations) {
      throw_input("label hierarchy is not a coarsening: " + violations.front().message +
                  (violations.size() > 1
                       ? " (+" + std::to_string(violations.size() - 1) + " more)"
                       : std::string{}));
    }
  }
}

}  // namespace safari
