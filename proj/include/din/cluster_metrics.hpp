#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "din/features.hpp"
#include "din/kernels.hpp"

namespace din::cluster {

/// Euclidean cluster summaries. Singletons have avg = diam = 0.
struct ClusterStats {
  std::size_t k = 0;
  std::vector<std::size_t> sizes;
  std::vector<double> avg;    // mean distance over unordered pairs
  std::vector<double> diam;   // largest pair distance
  std::vector<double> d_min;  // k x k, closest cross-cluster pair
  std::vector<double> d_cen;  // k x k, distance between cluster means

  double min_between(std::size_t i, std::size_t j) const { return d_min[i * k + j]; }
  double centroid_distance(std::size_t i, std::size_t j) const { return d_cen[i * k + j]; }
};

/// labels in [0, k). Throws DataError if any cluster is empty.
ClusterStats cluster_stats(const FeatureMatrix& x, std::span<const std::size_t> labels, std::size_t k,
                           kernels::Backend backend = kernels::Backend::kParallel);

/// (1/k) sum_i max_{j != i} (avg_i + avg_j) / d_cen(i, j). Throws UsageError
/// for k < 2 and NumericalError when two centroids coincide.
double davies_bouldin(const ClusterStats& stats);

struct SilhouetteOptions {
  /// Evaluate on a seeded random subset of at most this many rows.
  std::optional<std::size_t> sample_cap;
  std::uint64_t seed = 1;
  kernels::Backend backend = kernels::Backend::kParallel;
};

struct Silhouette {
  std::vector<double> values;        // per evaluated row
  std::vector<std::size_t> rows;     // which rows were evaluated
  double mean = 0.0;
};

/// Throws UsageError unless at least two clusters are non-empty.
Silhouette silhouette(const FeatureMatrix& x, std::span<const std::size_t> labels, std::size_t k,
                      const SilhouetteOptions& options = {});

}  // namespace din::cluster
