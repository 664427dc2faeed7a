#pragma once

// Distance kernels shared by k-means, the validity metrics and assignment.
// Each has a serial reference and an OpenMP path; both do the same per-row
// arithmetic and reduce in row order, so results are bit-identical.

#include <cstddef>
#include <span>
#include <vector>

namespace din::kernels {

enum class Backend { kSerial, kParallel };

struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// labels[i] = argmin_c |x_i - c|^2, lowest index on ties; sq_dist[i] the minimum.
void nearest_centroid(MatrixView x, MatrixView centroids, std::span<std::size_t> labels, std::span<double> sq_dist,
                      Backend backend);

/// out[i * k + c] = |x_i - c| (Euclidean).
void centroid_distances(MatrixView x, MatrixView centroids, std::span<double> out, Backend backend);

/// Per-point silhouette: a = mean distance to the rest of its own cluster,
/// b = smallest mean distance to another non-empty cluster; 0 for singletons
/// and when max(a, b) = 0.
void silhouette_values(MatrixView x, std::span<const std::size_t> labels, std::size_t k, std::span<double> out,
                       Backend backend);

/// Pairwise-distance summaries over unordered point pairs.
struct PairwiseSummary {
  std::size_t k = 0;
  std::vector<double> within_sum;  // k: sum of within-cluster pair distances
  std::vector<double> within_max;  // k: largest within-cluster pair distance
  std::vector<double> cross_min;   // k x k: smallest distance between clusters (symmetric, diagonal unused)
};

PairwiseSummary pairwise_summary(MatrixView x, std::span<const std::size_t> labels, std::size_t k, Backend backend);

}  // namespace din::kernels
