#include "din/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "din/errors.hpp"
#include "din/random.hpp"

namespace din::cohort {

namespace {

constexpr double round_to(double v, double step) { return std::round(v / step) * step; }

Regime stable_regime() {
  Regime r;
  r.name = "stable";
  r.variables = {{
      {122.0, 6.0, 0.0, 2.0, 240.0, 5.0, 1.0},   // sbp
      {74.0, 4.0, 0.0, 1.0, 240.0, 4.0, 1.0},    // dbp
      {74.0, 5.0, 0.0, 2.0, 240.0, 3.0, 1.0},    // heart rate
      {36.8, 0.2, 0.0, 0.05, 240.0, 0.1, 0.6},   // temperature
      {97.5, 0.8, 0.0, 0.2, 240.0, 0.6, 1.0},    // spo2
      {16.0, 1.5, 0.0, 0.5, 240.0, 1.0, 1.0},    // resp rate
  }};
  r.min_rate_per_hour = 0.7;
  r.max_rate_per_hour = 1.2;
  return r;
}

Regime deteriorating_regime() {
  Regime r;
  r.name = "deteriorating";
  r.variables = {{
      {128.0, 6.0, -5.0, 0.0, 240.0, 5.0, 1.0},
      {78.0, 4.0, -3.0, 0.0, 240.0, 4.0, 1.0},
      {82.0, 5.0, 5.0, 0.0, 240.0, 3.0, 1.0},
      {37.1, 0.2, 0.15, 0.0, 240.0, 0.1, 0.6},
      {96.5, 0.8, -0.6, 0.0, 240.0, 0.6, 1.0},
      {18.0, 1.5, 1.5, 0.0, 240.0, 1.0, 1.0},
  }};
  r.min_rate_per_hour = 3.0;
  r.max_rate_per_hour = 4.5;
  return r;
}

Regime oscillating_regime() {
  Regime r;
  r.name = "oscillating";
  r.variables = {{
      {116.0, 6.0, 0.0, 14.0, 150.0, 5.0, 1.0},
      {70.0, 4.0, 0.0, 8.0, 150.0, 4.0, 1.0},
      {90.0, 5.0, 0.0, 12.0, 150.0, 3.0, 1.0},
      {37.8, 0.2, 0.0, 0.6, 150.0, 0.1, 0.6},
      {96.0, 0.8, 0.0, 1.5, 150.0, 0.6, 1.0},
      {20.0, 1.5, 0.0, 4.0, 150.0, 1.0, 1.0},
  }};
  r.min_rate_per_hour = 1.6;
  r.max_rate_per_hour = 2.4;
  return r;
}

}  // namespace

std::vector<Regime> default_regimes(std::size_t count) {
  const Regime base[] = {stable_regime(), deteriorating_regime(), oscillating_regime()};
  std::vector<Regime> out;
  for (std::size_t i = 0; i < count; ++i) {
    Regime r = base[i % 3];
    if (i >= 3) {
      const double shift = static_cast<double>(i / 3);
      r.name += "_" + std::to_string(i / 3);
      for (auto& v : r.variables) v.level += 0.5 * shift * v.level_jitter * (i % 2 ? 1.0 : -1.0) * 4.0;
      r.min_rate_per_hour *= 1.0 + 0.5 * shift;
      r.max_rate_per_hour *= 1.0 + 0.5 * shift;
    }
    out.push_back(std::move(r));
  }
  return out;
}

SyntheticCohort synthesize(const SynthConfig& config) {
  if (config.regimes.empty()) throw UsageError("synthesize: at least one regime is required");
  if (config.per_regime == 0) throw UsageError("synthesize: per_regime must be positive");
  if (!(config.noise_scale >= 0.0)) throw UsageError("synthesize: noise_scale must be non-negative");
  config.ranges.validate();
  for (const Regime& r : config.regimes) {
    if (!(r.min_rate_per_hour > 0.0) || !(r.max_rate_per_hour >= r.min_rate_per_hour)) {
      throw UsageError("synthesize: regime '" + r.name + "' needs a positive intensity range");
    }
    for (const auto& v : r.variables) {
      if (!(v.rate_multiplier > 0.0)) throw UsageError("synthesize: regime '" + r.name + "' has non-positive intensity");
      if (!(v.period_minutes > 0.0)) throw UsageError("synthesize: regime '" + r.name + "' has non-positive period");
    }
  }

  const std::size_t n_regimes = config.regimes.size();
  const std::size_t n = n_regimes * config.per_regime;
  SyntheticCohort out;
  out.cohort.encounters.resize(n);
  out.labels.resize(n);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % n_regimes;
    const Regime& regime = config.regimes[label];
    Rng rng(config.seed ^ static_cast<std::uint64_t>(i));
    Encounter e;
    e.id = "enc" + std::string(6 - std::min<std::size_t>(6, std::to_string(i).size()), '0') + std::to_string(i);
    e.admit_order = i;
    e.series.resize(kNumVariables);
    const double rate = rng.uniform(regime.min_rate_per_hour, regime.max_rate_per_hour);
    for (std::size_t d = 0; d < kNumVariables; ++d) {
      const Trajectory& tr = regime.variables[d];
      const double level = tr.level + tr.level_jitter * rng.normal();
      const double per_minute = rate * tr.rate_multiplier / 60.0;
      double t = rng.exponential(per_minute);
      while (t <= kWindowMinutes) {
        const double value = level + tr.slope_per_hour * (t / 60.0) +
                             tr.amplitude * std::sin(2.0 * std::numbers::pi * t / tr.period_minutes) +
                             config.noise_scale * tr.noise_sd * rng.normal();
        const double tq = round_to(t, 0.01);
        const double xq = round_to(value, 0.01);
        if (config.ranges.contains(d, xq) && tq <= kWindowMinutes) e.series[d].push_back({tq, xq});
        t += rng.exponential(per_minute);
      }
      normalize_series(e.series[d]);
    }
    // Keep every encounter admissible: at most one variable entirely missing.
    for (std::size_t d = 0; d < kNumVariables && e.missing_variables() >= 2; ++d) {
      if (!e.series[d].empty()) continue;
      const Trajectory& tr = regime.variables[d];
      const double t = round_to(rng.uniform(0.0, kWindowMinutes), 0.01);
      const double value = tr.level + tr.slope_per_hour * (t / 60.0) +
                           tr.amplitude * std::sin(2.0 * std::numbers::pi * t / tr.period_minutes);
      e.series[d].push_back({t, std::clamp(round_to(value, 0.01), config.ranges.ranges[d].min,
                                           config.ranges.ranges[d].max)});
    }
    out.cohort.encounters[i] = std::move(e);
    out.labels[i] = label;
  }
  return out;
}

}  // namespace din::cohort
