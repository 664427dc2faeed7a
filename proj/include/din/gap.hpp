#pragma once

#include <cstdint>
#include <vector>

#include "din/features.hpp"
#include "din/kmeans.hpp"

namespace din::cluster {

struct GapConfig {
  std::vector<std::size_t> k_range{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t references = 10;  // B
  KMeansConfig kmeans;          // k is overridden per candidate
  std::uint64_t seed = 1;

  void validate() const;
};

struct GapPoint {
  std::size_t k = 0;
  double log_w = 0.0;          // log W_k on the data
  double reference_log_w = 0.0;  // mean over references of log W*_kb
  double gap = 0.0;
  double s = 0.0;  // sd_b(log W*_kb) sqrt(1 + 1/B)
};

struct GapResult {
  std::vector<GapPoint> curve;
  std::size_t chosen_k = 0;
};

/// Gap statistic with references drawn uniformly over the per-dimension
/// bounding box of x. Chooses the smallest k with Gap(k) >= Gap(k+1) - s_{k+1},
/// or the last k in range. Throws DataError when the bounding box is a single
/// point or a within-cluster dispersion is zero.
GapResult gap_statistic(const FeatureMatrix& x, const GapConfig& config);

/// The selection rule on its own, over a curve ordered by k.
std::size_t select_k(const std::vector<GapPoint>& curve);

}  // namespace din::cluster
