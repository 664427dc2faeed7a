#include "din/kmeans.hpp"

#include <cmath>
#include <limits>

#include "din/errors.hpp"
#include "din/random.hpp"

namespace din::cluster {

using kernels::Backend;
using kernels::MatrixView;

FeatureMatrix::FeatureMatrix(std::size_t m, std::size_t p) : ids(m), rows(m), cols(p), data(m * p, 0.0) {}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols);
  out.columns = columns;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (i >= rows) throw UsageError("FeatureMatrix::subset: row " + std::to_string(i) + " out of range");
    if (i < ids.size()) out.ids[r] = ids[i];
    for (std::size_t j = 0; j < cols; ++j) out.at(r, j) = at(i, j);
  }
  return out;
}

void FeatureMatrix::validate() const {
  if (data.size() != rows * cols) throw DataError("feature matrix: data size does not match rows x cols");
  if (!ids.empty() && ids.size() != rows) throw DataError("feature matrix: id count does not match rows");
  if (!columns.empty() && columns.size() != cols) throw DataError("feature matrix: column names do not match cols");
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw DataError("feature matrix: non-finite value at row " + std::to_string(i / cols + 1) + ", column " +
                      std::to_string(i % cols + 1));
}

void KMeansConfig::validate() const {
  if (k == 0) throw UsageError("kmeans: k must be >= 1");
  if (restarts == 0) throw UsageError("kmeans: restarts must be >= 1");
  if (max_iter == 0) throw UsageError("kmeans: max_iter must be >= 1");
  if (!(tol >= 0.0)) throw UsageError("kmeans: tol must be >= 0");
}

namespace {

struct Run {
  std::vector<double> centroids;
  std::vector<std::size_t> labels;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> history;
};

std::vector<double> plus_plus_seeds(const FeatureMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t m = x.rows, p = x.cols;
  std::vector<double> c(k * p);
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(m);
  for (std::size_t c_idx = 0;; ++c_idx) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), c.begin() + static_cast<std::ptrdiff_t>(c_idx * p));
    if (c_idx + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(x.row(i), x.row(pick)));
      total += d2[i];
    }
    if (total == 0.0) {
      pick = rng.below(m);  // every point already sits on a centroid
      continue;
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    pick = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (d2[i] == 0.0) continue;
      acc += d2[i];
      if (acc > u) {
        pick = i;
        break;
      }
    }
    if (pick == m)  // round-off at the top end
      for (std::size_t i = m; i-- > 0;)
        if (d2[i] > 0.0) {
          pick = i;
          break;
        }
  }
  return c;
}

double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double d : v) s += d;
  return s;
}

Run lloyd(const FeatureMatrix& x, const KMeansConfig& cfg, Rng& rng, Backend backend) {
  const std::size_t m = x.rows, p = x.cols, k = cfg.k;
  Run run;
  run.centroids = plus_plus_seeds(x, k, rng);
  run.labels.assign(m, 0);
  std::vector<double> sq(m);
  auto assign = [&] {
    kernels::nearest_centroid(x.view(), {run.centroids, k, p}, run.labels, sq, backend);
    run.inertia = ordered_sum(sq);
    run.history.push_back(run.inertia);
  };
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    assign();
    std::vector<double> next(k * p, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      ++counts[run.labels[i]];
      for (std::size_t j = 0; j < p; ++j) next[run.labels[i] * p + j] += x.at(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < p; ++j) next[c * p + j] /= static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      for (std::size_t i = 1; i < m; ++i)
        if (sq[i] > sq[far]) far = i;
      for (std::size_t j = 0; j < p; ++j) next[c * p + j] = x.at(far, j);
      sq[far] = 0.0;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(kernels::squared_distance({next.data() + c * p, p},
                                                                  {run.centroids.data() + c * p, p})));
    run.centroids = std::move(next);
    run.iterations = it + 1;
    if (shift < cfg.tol) break;
  }
  assign();
  return run;
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& x, const KMeansConfig& config) {
  config.validate();
  x.validate();
  if (x.rows == 0 || x.cols == 0) throw DataError("kmeans: empty feature matrix");
  if (config.k > x.rows)
    throw UsageError("kmeans: k = " + std::to_string(config.k) + " exceeds the number of rows (" +
                     std::to_string(x.rows) + ")");
  const std::size_t n = config.restarts;
  std::vector<Run> runs(n);
  const bool par = config.backend == Backend::kParallel;
#pragma omp parallel for schedule(dynamic, 1) if (par && n > 1)
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng(derive_seed(config.seed, r));
    runs[r] = lloyd(x, config, rng, Backend::kSerial);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < n; ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  Run& w = runs[best];
  KMeansResult out;
  out.model = {config.k, x.cols, std::move(w.centroids), w.inertia, w.iterations, best, std::move(w.history)};
  out.labels = std::move(w.labels);
  return out;
}

Assignment assign_phenotype(const FeatureMatrix& x, const ClusterModel& model, Backend backend) {
  if (x.cols != model.dim)
    throw ShapeError("assign: features have " + std::to_string(x.cols) + " columns, model expects " +
                     std::to_string(model.dim));
  x.validate();
  Assignment a{std::vector<std::size_t>(x.rows), std::vector<double>(x.rows * model.k), model.k};
  std::vector<double> sq(x.rows);
  // Labels come from squared distances, exactly as in kmeans, so ties resolve identically.
  kernels::nearest_centroid(x.view(), model.centroid_view(), a.labels, sq, backend);
  kernels::centroid_distances(x.view(), model.centroid_view(), a.distances, backend);
  return a;
}

}  // namespace din::cluster
