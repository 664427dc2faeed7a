#pragma once

#include <cstdint>
#include <vector>

#include "din/features.hpp"
#include "din/kernels.hpp"

namespace din::cluster {

struct KMeansConfig {
  std::size_t k = 7;
  std::size_t restarts = 32;
  std::size_t max_iter = 300;
  /// Stop once no centroid moves by tol or more (Euclidean).
  double tol = 1e-10;
  std::uint64_t seed = 1;
  kernels::Backend backend = kernels::Backend::kParallel;

  void validate() const;
};

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim, row-major
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::size_t restart = 0;  // index of the winning restart
  /// Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_history;

  kernels::MatrixView centroid_view() const { return {centroids, k, dim}; }
  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }
};

struct KMeansResult {
  ClusterModel model;
  std::vector<std::size_t> labels;
};

/// k-means++ seeding and Lloyd iterations, best of `restarts` by
/// (inertia, restart index). A cluster left empty is reseeded at the point
/// farthest from its assigned centroid. Throws UsageError if k > rows.
KMeansResult kmeans(const FeatureMatrix& x, const KMeansConfig& config);

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> distances;  // rows x k, Euclidean
  std::size_t k = 0;
};

/// Nearest centroid per row, lowest index on ties; every distance is returned.
/// Throws ShapeError if the feature dimension differs from the model's.
Assignment assign_phenotype(const FeatureMatrix& x, const ClusterModel& model,
                            kernels::Backend backend = kernels::Backend::kParallel);

}  // namespace din::cluster
