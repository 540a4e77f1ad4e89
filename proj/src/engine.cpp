#include "safari/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include "safari/error.hpp"
#include "safari/thresholding.hpp"

namespace safari {

Cluster make_singleton(ClusterId id, std::size_t row_index, VectorRef row) {
  return Cluster{id, {row_index}, Vector(row)};
}

Cluster merge_clusters(const Cluster& a, const Cluster& b, ClusterId new_id) {
  if (a.members.empty() || b.members.empty()) {
    throw_usage("merge_clusters: clusters must be nonempty");
  }
  if (a.centroid.size() != b.centroid.size()) {
    throw_usage("merge_clusters: centroid dimension mismatch");
  }
  Cluster out;
  out.id = new_id;
  out.members.reserve(a.size() + b.size());
  std::merge(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
             std::back_inserter(out.members));
  if (std::adjacent_find(out.members.begin(), out.members.end()) != out.members.end()) {
    throw_usage("merge_clusters: clusters " + std::to_string(a.id) + " and " +
                std::to_string(b.id) + " share members");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  out.centroid = (na * a.centroid + nb * b.centroid) / (na + nb);
  return out;
}

// ---------------------------------------------------------------------------
// HeapPairFinder

namespace {

constexpr auto kHeapOrder = std::greater<PairCandidate>{};

// Distances from `centroid` to each live centroid, optionally split across
// threads. Every entry is computed independently, so the result does not
// depend on the thread count.
std::vector<double> distances_to(const Vector& centroid, ClusterId id,
                                 const std::vector<ClusterId>& live,
                                 const std::vector<Vector>& centroids,
                                 std::size_t threads) {
  std::vector<double> out(live.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const ClusterId other = live[k];
      out[k] = other < id ? semantic_distance(centroids[other], centroid)
                          : semantic_distance(centroid, centroids[other]);
    }
  };
  constexpr std::size_t kParallelCutoff = 2048;
  if (threads <= 1 || live.size() < kParallelCutoff) {
    work(0, live.size());
    return out;
  }
  const std::size_t chunk = (live.size() + threads - 1) / threads;
  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(live.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

void HeapPairFinder::insert(ClusterId id, const Vector& centroid) {
  if (alive(id)) throw_usage("pair finder: cluster " + std::to_string(id) + " already live");
  if (!(centroid.squaredNorm() > 0.0)) {
    throw_numeric("pair finder: cluster " + std::to_string(id) + " has a zero-norm centroid");
  }
  if (id >= centroids_.size()) {
    centroids_.resize(id + 1);
    alive_.resize(id + 1, false);
  }
  const std::vector<double> dist = distances_to(centroid, id, live_, centroids_, threads_);
  for (std::size_t k = 0; k < live_.size(); ++k) {
    const ClusterId other = live_[k];
    heap_.push_back({dist[k], std::min(other, id), std::max(other, id)});
    std::push_heap(heap_.begin(), heap_.end(), kHeapOrder);
  }
  centroids_[id] = centroid;
  alive_[id] = true;
  live_.insert(std::upper_bound(live_.begin(), live_.end(), id), id);
}

void HeapPairFinder::erase(ClusterId id) {
  if (!alive(id)) throw_usage("pair finder: cluster " + std::to_string(id) + " is not live");
  alive_[id] = false;
  centroids_[id] = Vector();
  live_.erase(std::lower_bound(live_.begin(), live_.end(), id));
}

void HeapPairFinder::compact() {
  std::erase_if(heap_, [this](const PairCandidate& c) { return !alive(c.lo) || !alive(c.hi); });
  std::make_heap(heap_.begin(), heap_.end(), kHeapOrder);
}

PairCandidate HeapPairFinder::nearest() {
  if (live_.size() < 2) throw_usage("pair finder: fewer than two live clusters");
  const std::size_t live_pairs = live_.size() * (live_.size() - 1) / 2;
  if (heap_.size() > 4 * live_pairs + 1024) compact();
  while (!heap_.empty()) {
    const PairCandidate& top = heap_.front();
    if (alive(top.lo) && alive(top.hi)) return top;
    std::pop_heap(heap_.begin(), heap_.end(), kHeapOrder);
    heap_.pop_back();
  }
  throw_usage("pair finder: heap exhausted with live clusters remaining");
}

std::pair<ClusterId, ClusterId> nearest_pair(std::span<const Cluster> clusters) {
  if (clusters.size() < 2) throw_usage("nearest_pair: need at least two clusters");
  HeapPairFinder finder;
  for (const Cluster& c : clusters) finder.insert(c.id, c.centroid);
  const PairCandidate best = finder.nearest();
  return {best.lo, best.hi};
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(ShiftMode mode) {
  switch (mode) {
    case ShiftMode::exact: return "exact";
    case ShiftMode::approx: return "approx";
    case ShiftMode::both: return "both";
  }
  return "approx";
}

ShiftMode parse_shift_mode(std::string_view text) {
  if (text == "exact") return ShiftMode::exact;
  if (text == "approx") return ShiftMode::approx;
  if (text == "both") return ShiftMode::both;
  throw_usage("unknown shift mode '" + std::string(text) + "' (expected exact|approx|both)");
}

std::size_t SafariConfig::effective_min_observations() const {
  return min_observations.value_or(default_min_observations(window_size));
}

// ---------------------------------------------------------------------------
// Main loop

namespace {

class ClusterCache {
 public:
  explicit ClusterCache(std::size_t capacity)
      : subspaces_(capacity), sigma_max_(capacity, -1.0) {}

  const SemanticFieldSubspace& subspace(const Matrix& rows, const Cluster& c) {
    auto& slot = subspaces_[c.id];
    if (!slot) slot = build_sfs(gather_rows(rows, c.members));
    return *slot;
  }
  void store(ClusterId id, SemanticFieldSubspace s) { subspaces_[id] = std::move(s); }

  double sigma_max(const Matrix& rows, const Cluster& c) {
    double& slot = sigma_max_[c.id];
    if (slot < 0.0) slot = spectral_norm(gather_rows(rows, c.members));
    return slot;
  }

  void drop(ClusterId id) {
    subspaces_[id].reset();
    sigma_max_[id] = -1.0;
  }

 private:
  std::vector<std::optional<SemanticFieldSubspace>> subspaces_;
  std::vector<double> sigma_max_;
};

void require_nonzero_rows(const Matrix& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    if (!rows.row(r).allFinite()) {
      throw_numeric("row " + std::to_string(r) + " contains a non-finite value");
    }
    if (!(rows.row(r).squaredNorm() > 0.0)) {
      throw_numeric("row " + std::to_string(r) + " has zero norm");
    }
  }
}

}  // namespace

SafariResult run_safari(const EmbeddingSet& embeddings, const SafariConfig& config) {
  HeapPairFinder finder(config.threads);
  return run_safari(embeddings.rows, config, finder);
}

SafariResult run_safari(const Matrix& rows, const SafariConfig& config, PairFinder& finder) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n < 2) throw_usage("run_safari: need at least two embeddings (got " + std::to_string(n) + ")");
  if (config.window_size < 2) throw_usage("run_safari: window size must be at least 2");
  require_nonzero_rows(rows);
  if (finder.live_count() != 0) throw_usage("run_safari: pair finder must start empty");

  SlidingWindowTracker tracker(config.window_size, config.multiplier,
                               config.effective_min_observations());
  const bool want_exact = config.shift_mode != ShiftMode::approx;
  const bool want_approx = config.shift_mode != ShiftMode::exact;

  std::vector<std::optional<Cluster>> clusters(2 * n - 1);
  ClusterCache cache(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<ClusterId>(i);
    clusters[i] = make_singleton(id, i, rows.row(static_cast<Eigen::Index>(i)).transpose());
    finder.insert(id, clusters[i]->centroid);
  }

  SafariResult result;
  Dendrogram& dendro = result.dendrogram;
  dendro.n_leaves = n;
  dendro.config = config;
  dendro.config.min_observations = config.effective_min_observations();
  dendro.events.reserve(n - 1);

  for (std::size_t t = 1; t < n; ++t) {
    const PairCandidate best = finder.nearest();
    const Cluster& left = *clusters[best.lo];
    const Cluster& right = *clusters[best.hi];
    const auto new_id = static_cast<ClusterId>(n + t - 1);

    // The larger input is the one compared against the union; equal sizes go to
    // the second.
    const Cluster& dominant = left.size() > right.size() ? left : right;
    const Cluster& other = left.size() > right.size() ? right : left;

    Cluster merged = merge_clusters(left, right, new_id);

    MergeEvent ev;
    ev.iteration = t;
    ev.left_id = left.id;
    ev.right_id = right.id;
    ev.new_id = new_id;
    ev.dominant_id = dominant.id;
    ev.left_size = left.size();
    ev.right_size = right.size();
    ev.linkage_distance = best.distance;

    std::optional<SemanticFieldSubspace> merged_space;
    if (want_exact) {
      merged_space = build_sfs(gather_rows(rows, merged.members));
      ev.exact = semantic_shift_exact(cache.subspace(rows, dominant), *merged_space);
    }
    if (want_approx) {
      ev.approx = cache.sigma_max(rows, other) * cache.sigma_max(rows, dominant);
    }

    const double value = ev.decision_value();
    ev.threshold_mu = tracker.mu();
    ev.threshold_tau = tracker.tau();
    ev.is_sfs = tracker.is_significant(value);
    tracker.observe(value);

    if (ev.is_sfs) {
      SemanticFieldSubspace s =
          merged_space ? *merged_space : build_sfs(gather_rows(rows, merged.members));
      s.source_cluster_id = new_id;
      s.iteration_created = t;
      dendro.sfs_registry.push_back({t, std::move(s)});
    }

    finder.erase(left.id);
    finder.erase(right.id);
    finder.insert(new_id, merged.centroid);
    if (merged_space) cache.store(new_id, std::move(*merged_space));
    cache.drop(best.lo);
    cache.drop(best.hi);
    clusters[best.lo].reset();
    clusters[best.hi].reset();
    clusters[new_id] = std::move(merged);

    dendro.events.push_back(std::move(ev));
  }

  result.shift_trace = shift_trace(dendro);
  return result;
}

std::vector<ShiftRecord> shift_trace(const Dendrogram& dendrogram) {
  std::vector<ShiftRecord> out;
  out.reserve(dendrogram.events.size());
  for (const MergeEvent& ev : dendrogram.events) {
    ShiftRecord rec;
    rec.iteration = ev.iteration;
    if (ev.exact) {
      rec.exact = ev.exact->total;
      rec.dis_sum = ev.exact->dis_sum;
      rec.dc_sum = ev.exact->dc_sum;
    }
    rec.approx = ev.approx;
    rec.mu = ev.threshold_mu;
    rec.tau = ev.threshold_tau;
    rec.is_sfs = ev.is_sfs;
    out.push_back(rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dendrogram utilities

void replay_merges(const Dendrogram& dendrogram, const MergeVisitor& visit) {
  const std::size_t n = dendrogram.n_leaves;
  std::vector<std::vector<std::size_t>> members(n + dendrogram.events.size());
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  for (const MergeEvent& ev : dendrogram.events) {
    if (ev.new_id >= members.size() || ev.left_id >= ev.new_id || ev.right_id >= ev.new_id) {
      throw_input("dendrogram event " + std::to_string(ev.iteration) + " has invalid ids");
    }
    auto& a = members[ev.left_id];
    auto& b = members[ev.right_id];
    if (a.empty() || b.empty()) {
      throw_input("dendrogram event " + std::to_string(ev.iteration) +
                  " merges a cluster that is not live");
    }
    std::vector<std::size_t> merged;
    merged.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
    const bool left_dominant = ev.dominant_id == ev.left_id;
    if (visit) {
      visit(ev, left_dominant ? a : b, left_dominant ? b : a, merged);
    }
    a.clear();
    a.shrink_to_fit();
    b.clear();
    b.shrink_to_fit();
    members[ev.new_id] = std::move(merged);
  }
}

void validate_dendrogram(const Dendrogram& dendrogram, const Matrix* rows) {
  const std::size_t n = dendrogram.n_leaves;
  if (n < 2) throw_input("dendrogram: needs at least two leaves");
  if (dendrogram.events.size() != n - 1) {
    throw_input("dendrogram: expected " + std::to_string(n - 1) + " events, found " +
                std::to_string(dendrogram.events.size()));
  }
  if (rows && static_cast<std::size_t>(rows->rows()) != n) {
    throw_input("dendrogram: leaf count does not match the embedding rows");
  }

  std::vector<std::size_t> sizes(2 * n - 1, 0);
  std::vector<Vector> centroids;
  if (rows) centroids.resize(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    sizes[i] = 1;
    if (rows) centroids[i] = rows->row(static_cast<Eigen::Index>(i)).transpose();
  }
  std::vector<bool> consumed(2 * n - 1, false);
  const double multiplier = dendrogram.config.multiplier;

  for (std::size_t t = 0; t < dendrogram.events.size(); ++t) {
    const MergeEvent& ev = dendrogram.events[t];
    const std::string where = "dendrogram event " + std::to_string(t + 1);
    if (ev.iteration != t + 1) throw_input(where + ": iteration index out of order");
    if (ev.new_id != n + t) throw_input(where + ": new id is not the next counter value");
    if (ev.left_id >= ev.right_id) throw_input(where + ": left id must be below right id");
    if (ev.right_id >= ev.new_id) throw_input(where + ": merges a cluster from the future");
    if (consumed[ev.left_id] || consumed[ev.right_id]) {
      throw_input(where + ": merges a cluster that was already merged");
    }
    if (sizes[ev.left_id] != ev.left_size || sizes[ev.right_id] != ev.right_size) {
      throw_input(where + ": recorded sizes disagree with the replay");
    }
    const ClusterId expected_dominant = ev.left_size > ev.right_size ? ev.left_id : ev.right_id;
    if (ev.dominant_id != expected_dominant) {
      throw_input(where + ": dominant cluster violates the larger-cluster rule");
    }
    if (!ev.exact && !ev.approx) throw_input(where + ": no shift value recorded");
    if (ev.is_sfs && !(ev.decision_value() > ev.threshold_mu + multiplier * ev.threshold_tau)) {
      throw_input(where + ": flagged as SFS without exceeding the threshold");
    }
    if (ev.exact) {
      const ShiftBreakdown& s = *ev.exact;
      if (s.dis_terms.size() != s.dc_terms.size()) {
        throw_input(where + ": DIS/DC term counts differ");
      }
      double total = 0.0;
      for (std::size_t i = 0; i < s.dis_terms.size(); ++i) total += s.dis_terms[i] * s.dc_terms[i];
      if (std::abs(total - s.total) > 1e-9 * std::max(1.0, std::abs(s.total))) {
        throw_input(where + ": shift total disagrees with its terms");
      }
    }
    if (rows) {
      const double d = semantic_distance(centroids[ev.left_id], centroids[ev.right_id]);
      if (std::abs(d - ev.linkage_distance) > 1e-12) {
        throw_input(where + ": linkage distance does not match the replayed centroids");
      }
      const double na = static_cast<double>(ev.left_size);
      const double nb = static_cast<double>(ev.right_size);
      centroids[ev.new_id] =
          (na * centroids[ev.left_id] + nb * centroids[ev.right_id]) / (na + nb);
      centroids[ev.left_id] = Vector();
      centroids[ev.right_id] = Vector();
    }
    consumed[ev.left_id] = consumed[ev.right_id] = true;
    sizes[ev.new_id] = ev.left_size + ev.right_size;
  }
  if (sizes[2 * n - 2] != n) throw_input("dendrogram: root does not cover every leaf");

  std::size_t previous = 0;
  for (const SfsEntry& entry : dendrogram.sfs_registry) {
    if (entry.iteration < 1 || entry.iteration > dendrogram.events.size() ||
        entry.iteration <= previous) {
      throw_input("dendrogram: SFS registry iterations must be increasing and in range");
    }
    if (!dendrogram.events[entry.iteration - 1].is_sfs) {
      throw_input("dendrogram: SFS registry entry at iteration " +
                  std::to_string(entry.iteration) + " is not a flagged merge");
    }
    if (entry.subspace.basis.rows() != entry.subspace.rank()) {
      throw_input("dendrogram: SFS basis rows disagree with its rank");
    }
    previous = entry.iteration;
  }
}

std::vector<ClusterId> cut_dendrogram(const Dendrogram& dendrogram, std::size_t merges) {
  if (merges > dendrogram.events.size()) {
    throw_usage("cut_dendrogram: iteration " + std::to_string(merges) + " beyond " +
                std::to_string(dendrogram.events.size()) + " merges");
  }
  const std::size_t n = dendrogram.n_leaves;
  std::vector<ClusterId> owner(n);
  std::vector<std::vector<std::size_t>> members(n + merges);
  for (std::size_t i = 0; i < n; ++i) {
    owner[i] = static_cast<ClusterId>(i);
    members[i] = {i};
  }
  for (std::size_t t = 0; t < merges; ++t) {
    const MergeEvent& ev = dendrogram.events[t];
    auto& dst = members[ev.new_id];
    for (ClusterId src : {ev.left_id, ev.right_id}) {
      for (std::size_t leaf : members[src]) owner[leaf] = ev.new_id;
      dst.insert(dst.end(), members[src].begin(), members[src].end());
      members[src].clear();
    }
  }
  return owner;
}

}  // namespace safari
