#include "din/cluster_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "din/errors.hpp"
#include "din/random.hpp"

namespace din::cluster {

namespace {

void check_labels(const FeatureMatrix& x, std::span<const std::size_t> labels, std::size_t k) {
  if (labels.size() != x.rows)
    throw ShapeError("labels: " + std::to_string(labels.size()) + " labels for " + std::to_string(x.rows) + " rows");
  for (std::size_t l : labels)
    if (l >= k) throw UsageError("labels: label " + std::to_string(l) + " outside [0, " + std::to_string(k) + ")");
}

}  // namespace

ClusterStats cluster_stats(const FeatureMatrix& x, std::span<const std::size_t> labels, std::size_t k,
                           kernels::Backend backend) {
  check_labels(x, labels, k);
  ClusterStats s;
  s.k = k;
  s.sizes.assign(k, 0);
  for (std::size_t l : labels) ++s.sizes[l];
  for (std::size_t c = 0; c < k; ++c)
    if (s.sizes[c] == 0) throw DataError("cluster_stats: cluster " + std::to_string(c + 1) + " is empty");

  const kernels::PairwiseSummary pw = kernels::pairwise_summary(x.view(), labels, k, backend);
  s.avg.resize(k);
  s.diam = pw.within_max;
  for (std::size_t c = 0; c < k; ++c) {
    const double n = static_cast<double>(s.sizes[c]);
    s.avg[c] = s.sizes[c] > 1 ? 2.0 * pw.within_sum[c] / (n * (n - 1.0)) : 0.0;
  }
  s.d_min = pw.cross_min;
  for (std::size_t c = 0; c < k; ++c) s.d_min[c * k + c] = 0.0;

  std::vector<double> means(k * x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) means[labels[i] * x.cols + j] += x.at(i, j);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < x.cols; ++j) means[c * x.cols + j] /= static_cast<double>(s.sizes[c]);
  s.d_cen.assign(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      s.d_cen[a * k + b] = s.d_cen[b * k + a] = std::sqrt(kernels::squared_distance(
          {means.data() + a * x.cols, x.cols}, {means.data() + b * x.cols, x.cols}));
  return s;
}

double davies_bouldin(const ClusterStats& s) {
  if (s.k < 2) throw UsageError("davies_bouldin: needs at least 2 clusters");
  double total = 0.0;
  for (std::size_t i = 0; i < s.k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < s.k; ++j) {
      if (j == i) continue;
      const double d = s.centroid_distance(i, j);
      if (!(d > 0.0))
        throw NumericalError("davies_bouldin: clusters " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                             " have coincident centroids");
      worst = std::max(worst, (s.avg[i] + s.avg[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(s.k);
}

Silhouette silhouette(const FeatureMatrix& x, std::span<const std::size_t> labels, std::size_t k,
                      const SilhouetteOptions& options) {
  check_labels(x, labels, k);
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (options.sample_cap && x.rows > *options.sample_cap) {
    Rng rng(options.seed);
    rng.shuffle(rows);
    rows.resize(*options.sample_cap);
    std::sort(rows.begin(), rows.end());
  }
  const FeatureMatrix sub = rows.size() == x.rows ? FeatureMatrix{} : x.subset(rows);
  const FeatureMatrix& xs = rows.size() == x.rows ? x : sub;
  std::vector<std::size_t> ls(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) ls[r] = labels[rows[r]];

  std::vector<bool> present(k, false);
  for (std::size_t l : ls) present[l] = true;
  if (std::count(present.begin(), present.end(), true) < 2)
    throw UsageError("silhouette: needs at least 2 non-empty clusters");

  Silhouette out;
  out.values.resize(rows.size());
  out.rows = rows;
  kernels::silhouette_values(xs.view(), ls, k, out.values, options.backend);
  double sum = 0.0;
  for (double v : out.values) sum += v;
  out.mean = sum / static_cast<double>(out.values.size());
  return out;
}

}  // namespace din::cluster
