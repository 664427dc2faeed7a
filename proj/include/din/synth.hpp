#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "din/cohort.hpp"

namespace din::cohort {

/// Latent trajectory of one variable: level + slope * hours + amplitude * sin(2 pi t / period).
struct Trajectory {
  double level = 0.0;
  /// Sd of the per-encounter offset added to `level`.
  double level_jitter = 0.0;
  double slope_per_hour = 0.0;
  double amplitude = 0.0;
  double period_minutes = 120.0;
  double noise_sd = 0.0;
  /// Multiplies the encounter's sampling intensity for this variable.
  double rate_multiplier = 1.0;
};

struct Regime {
  std::string name;
  std::array<Trajectory, kNumVariables> variables;
  /// Each encounter draws its observation rate (per hour) uniformly from this range.
  double min_rate_per_hour = 1.0;
  double max_rate_per_hour = 1.0;
};

struct SynthConfig {
  std::vector<Regime> regimes;
  std::size_t per_regime = 100;
  std::uint64_t seed = 7;
  /// Multiplies every noise_sd.
  double noise_scale = 1.0;
  PlausibleRanges ranges = PlausibleRanges::defaults();
};

struct SyntheticCohort {
  Cohort cohort;
  /// Ground-truth regime index per encounter (evaluation only).
  std::vector<std::size_t> labels;
};

/// Built-in regimes that differ in trend shape and in sampling intensity.
/// The first three are hand-set; further regimes are deterministic variations.
std::vector<Regime> default_regimes(std::size_t count);

/// Encounters are interleaved by regime (encounter i has regime i mod R) so
/// every temporal split sees every regime. Each encounter draws from its own
/// generator seeded with seed ^ i; output does not depend on thread count.
SyntheticCohort synthesize(const SynthConfig& config);

}  // namespace din::cohort
