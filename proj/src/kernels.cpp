#include "din/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace din::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool parallel(Backend b) { return b == Backend::kParallel; }

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

void nearest_centroid(MatrixView x, MatrixView c, std::span<std::size_t> labels, std::span<double> sq_dist,
                      Backend backend) {
  const std::size_t m = x.rows, k = c.rows;
#pragma omp parallel for schedule(static) if (parallel(backend))
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    double best_d = kInf;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = squared_distance(x.row(i), c.row(j));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    labels[i] = best;
    sq_dist[i] = best_d;
  }
}

void centroid_distances(MatrixView x, MatrixView c, std::span<double> out, Backend backend) {
  const std::size_t m = x.rows, k = c.rows;
#pragma omp parallel for schedule(static) if (parallel(backend))
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = std::sqrt(squared_distance(x.row(i), c.row(j)));
}

void silhouette_values(MatrixView x, std::span<const std::size_t> labels, std::size_t k, std::span<double> out,
                       Backend backend) {
  const std::size_t m = x.rows;
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t l : labels) ++sizes[l];
#pragma omp parallel for schedule(dynamic, 16) if (parallel(backend))
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t own = labels[i];
    if (sizes[own] <= 1) {
      out[i] = 0.0;
      continue;
    }
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) sums[labels[j]] += std::sqrt(squared_distance(x.row(i), x.row(j)));
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = kInf;
    for (std::size_t c = 0; c < k; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    out[i] = denom > 0.0 && std::isfinite(b) ? (b - a) / denom : 0.0;
  }
}

PairwiseSummary pairwise_summary(MatrixView x, std::span<const std::size_t> labels, std::size_t k, Backend backend) {
  const std::size_t m = x.rows;
  // Row i contributes its pairs (i, j > i): one within-cluster sum and max, and
  // a min distance to every other cluster.
  std::vector<double> row_sum(m, 0.0), row_max(m, 0.0), row_min(m * k, kInf);
#pragma omp parallel for schedule(dynamic, 16) if (parallel(backend))
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ci = labels[i];
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = std::sqrt(squared_distance(x.row(i), x.row(j)));
      const std::size_t cj = labels[j];
      if (cj == ci) {
        row_sum[i] += d;
        row_max[i] = std::max(row_max[i], d);
      } else {
        row_min[i * k + cj] = std::min(row_min[i * k + cj], d);
      }
    }
  }
  PairwiseSummary s{k, std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), std::vector<double>(k * k, kInf)};
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ci = labels[i];
    s.within_sum[ci] += row_sum[i];
    s.within_max[ci] = std::max(s.within_max[ci], row_max[i]);
    for (std::size_t c = 0; c < k; ++c) {
      const double d = row_min[i * k + c];
      if (d < s.cross_min[ci * k + c]) s.cross_min[ci * k + c] = s.cross_min[c * k + ci] = d;
    }
  }
  return s;
}

}  // namespace din::kernels
