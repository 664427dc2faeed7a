#include "din/gap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "din/errors.hpp"
#include "din/random.hpp"

namespace din::cluster {

void GapConfig::validate() const {
  if (k_range.empty()) throw UsageError("gap: k range is empty");
  for (std::size_t i = 0; i < k_range.size(); ++i) {
    if (k_range[i] == 0) throw UsageError("gap: k must be >= 1");
    if (i > 0 && k_range[i] <= k_range[i - 1]) throw UsageError("gap: k range must be strictly ascending");
  }
  if (references == 0) throw UsageError("gap: need at least one reference set");
  KMeansConfig probe = kmeans;
  probe.k = 1;
  probe.validate();
}

namespace {

double log_dispersion(const FeatureMatrix& x, std::size_t k, const KMeansConfig& base, std::uint64_t seed) {
  KMeansConfig cfg = base;
  cfg.k = k;
  cfg.seed = seed;
  const double w = kmeans(x, cfg).model.inertia;
  if (!(w > 0.0)) throw DataError("gap: within-cluster dispersion is zero at k = " + std::to_string(k));
  return std::log(w);
}

}  // namespace

std::size_t select_k(const std::vector<GapPoint>& curve) {
  if (curve.empty()) throw UsageError("gap: empty curve");
  for (std::size_t i = 0; i + 1 < curve.size(); ++i)
    if (curve[i].gap >= curve[i + 1].gap - curve[i + 1].s) return curve[i].k;
  return curve.back().k;
}

GapResult gap_statistic(const FeatureMatrix& x, const GapConfig& config) {
  config.validate();
  x.validate();
  if (config.k_range.back() > x.rows)
    throw UsageError("gap: k = " + std::to_string(config.k_range.back()) + " exceeds the number of rows (" +
                     std::to_string(x.rows) + ")");
  const std::size_t m = x.rows, p = x.cols, nk = config.k_range.size(), nb = config.references;
  std::vector<double> lo(p, 0.0), hi(p, 0.0);
  bool degenerate = true;
  for (std::size_t j = 0; j < p; ++j) {
    lo[j] = hi[j] = x.at(0, j);
    for (std::size_t i = 1; i < m; ++i) {
      lo[j] = std::min(lo[j], x.at(i, j));
      hi[j] = std::max(hi[j], x.at(i, j));
    }
    if (hi[j] > lo[j]) degenerate = false;
  }
  if (degenerate) throw DataError("gap: all rows are identical (zero bounding box)");

  std::vector<double> data_log_w(nk);
  for (std::size_t i = 0; i < nk; ++i)
    data_log_w[i] = log_dispersion(x, config.k_range[i], config.kmeans, config.kmeans.seed);

  std::vector<double> ref_log_w(nb * nk);
  std::vector<std::exception_ptr> errors(nb);
#pragma omp parallel for schedule(dynamic, 1) if (config.kmeans.backend == kernels::Backend::kParallel)
  for (std::size_t b = 0; b < nb; ++b) {
    try {
      Rng rng(derive_seed(config.seed, b));
      FeatureMatrix ref(m, p);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j) ref.at(i, j) = rng.uniform(lo[j], hi[j]);
      KMeansConfig inner = config.kmeans;
      inner.backend = kernels::Backend::kSerial;
      for (std::size_t i = 0; i < nk; ++i)
        ref_log_w[b * nk + i] = log_dispersion(ref, config.k_range[i], inner, derive_seed(config.seed, nb + b));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  GapResult out;
  const double bn = static_cast<double>(nb);
  for (std::size_t i = 0; i < nk; ++i) {
    double mean = 0.0;
    for (std::size_t b = 0; b < nb; ++b) mean += ref_log_w[b * nk + i];
    mean /= bn;
    double var = 0.0;
    for (std::size_t b = 0; b < nb; ++b) var += (ref_log_w[b * nk + i] - mean) * (ref_log_w[b * nk + i] - mean);
    const double sd = std::sqrt(var / bn);
    out.curve.push_back({config.k_range[i], data_log_w[i], mean, mean - data_log_w[i], sd * std::sqrt(1.0 + 1.0 / bn)});
  }
  out.chosen_k = select_k(out.curve);
  return out;
}

}  // namespace din::cluster
