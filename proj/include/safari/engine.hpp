#pragma once

#include <compare>
#include <functional>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "safari/embedding_set.hpp"
#include "safari/linalg.hpp"
#include "safari/sfs.hpp"

namespace safari {

/// A set of row indices into an embedding matrix with its unnormalized mean.
struct Cluster {
  ClusterId id = 0;
  std::vector<std::size_t> members;  // sorted ascending
  Vector centroid;

  std::size_t size() const { return members.size(); }
};

Cluster make_singleton(ClusterId id, std::size_t row_index, VectorRef row);

/// Union of two disjoint clusters; the centroid is the size-weighted mean.
Cluster merge_clusters(const Cluster& a, const Cluster& b, ClusterId new_id);

/// Candidate merge. Ordered by distance, then by (lo, hi) so ties resolve to
/// the lexicographically smallest id pair.
struct PairCandidate {
  double distance = 0.0;
  ClusterId lo = 0;
  ClusterId hi = 0;

  auto operator<=>(const PairCandidate&) const = default;
};

/// Nearest-pair search over a changing set of live clusters.
class PairFinder {
 public:
  virtual ~PairFinder() = default;
  virtual void insert(ClusterId id, const Vector& centroid) = 0;
  virtual void erase(ClusterId id) = 0;
  virtual PairCandidate nearest() = 0;
  virtual std::size_t live_count() const = 0;
};

/// Lazy-deletion binary min-heap over all live pair distances. Entries that
/// touch a dead cluster are skipped when they surface; the heap is compacted
/// once stale entries dominate.
class HeapPairFinder final : public PairFinder {
 public:
  explicit HeapPairFinder(std::size_t threads = 1) : threads_(threads == 0 ? 1 : threads) {}

  void insert(ClusterId id, const Vector& centroid) override;
  void erase(ClusterId id) override;
  PairCandidate nearest() override;
  std::size_t live_count() const override { return live_.size(); }

 private:
  bool alive(ClusterId id) const { return id < alive_.size() && alive_[id]; }
  void compact();

  std::size_t threads_;
  std::vector<Vector> centroids_;  // indexed by id
  std::vector<bool> alive_;
  std::vector<ClusterId> live_;    // ascending
  std::vector<PairCandidate> heap_;
};

/// Centroid-cosine nearest pair among `clusters` (at least two), returned as
/// (smaller id, larger id).
std::pair<ClusterId, ClusterId> nearest_pair(std::span<const Cluster> clusters);

enum class ShiftMode { exact, approx, both };

std::string_view to_string(ShiftMode mode);
ShiftMode parse_shift_mode(std::string_view text);

struct SafariConfig {
  std::size_t window_size = 100;
  double multiplier = 3.0;
  std::optional<std::size_t> min_observations;  // default max(2, ceil(w / 4))
  ShiftMode shift_mode = ShiftMode::approx;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  std::size_t effective_min_observations() const;
};

struct MergeEvent {
  std::size_t iteration = 0;  // 1-based
  ClusterId left_id = 0;      // smaller id of the merged pair
  ClusterId right_id = 0;
  ClusterId new_id = 0;
  ClusterId dominant_id = 0;  // input whose span is compared against the union
  std::size_t left_size = 0;
  std::size_t right_size = 0;
  double linkage_distance = 0.0;
  std::optional<ShiftBreakdown> exact;
  std::optional<double> approx;
  double threshold_mu = 0.0;
  double threshold_tau = 0.0;
  bool is_sfs = false;

  /// Value the threshold was applied to: exact when available.
  double decision_value() const { return exact ? exact->total : approx.value_or(0.0); }
};

struct SfsEntry {
  std::size_t iteration = 0;
  SemanticFieldSubspace subspace;
};

struct Dendrogram {
  std::vector<MergeEvent> events;
  std::size_t n_leaves = 0;
  std::vector<SfsEntry> sfs_registry;
  SafariConfig config;
};

struct ShiftRecord {
  std::size_t iteration = 0;
  std::optional<double> exact;
  std::optional<double> approx;
  std::optional<double> dis_sum;
  std::optional<double> dc_sum;
  double mu = 0.0;
  double tau = 0.0;
  bool is_sfs = false;
};

struct SafariResult {
  Dendrogram dendrogram;
  std::vector<ShiftRecord> shift_trace;
};

/// Agglomerative clustering with per-merge subspace delineation until a
/// single cluster remains.
SafariResult run_safari(const EmbeddingSet& embeddings, const SafariConfig& config);

/// Same loop driven by a caller-supplied pair finder.
SafariResult run_safari(const Matrix& rows, const SafariConfig& config, PairFinder& finder);

std::vector<ShiftRecord> shift_trace(const Dendrogram& dendrogram);

/// Structural checks: n - 1 events, fresh sequential ids, no cluster merged
/// twice, consistent sizes, the larger-cluster rule and SFS flags consistent
/// with the recorded threshold. When `rows` is given, centroids replayed from
/// singletons must reproduce every recorded linkage distance.
void validate_dendrogram(const Dendrogram& dendrogram, const Matrix* rows = nullptr);

/// Flat clustering after the first `merges` events: the cluster id owning
/// each leaf.
std::vector<ClusterId> cut_dendrogram(const Dendrogram& dendrogram, std::size_t merges);

/// Replays every event from singletons, handing the member lists (sorted) of
/// the dominant input, the other input, and their union to `visit`.
using MergeVisitor = std::function<void(const MergeEvent&, std::span<const std::size_t> dominant,
                                        std::span<const std::size_t> other,
                                        std::span<const std::size_t> merged)>;
void replay_merges(const Dendrogram& dendrogram, const MergeVisitor& visit);

}  // namespace safari
