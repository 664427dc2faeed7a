#include "din/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "din/errors.hpp"

namespace din::baseline {

HourlyGrid hourly_resample(const cohort::Encounter& e) {
  HourlyGrid grid(e.series.size());
  for (std::size_t d = 0; d < e.series.size(); ++d) {
    std::array<double, kHours> sum{};
    std::array<std::size_t, kHours> count{};
    for (const auto& o : e.series[d]) {
      if (!(o.t >= 0.0 && o.t <= cohort::kWindowMinutes))
        throw DataError("hourly_resample: encounter '" + e.id + "' has an observation at t = " +
                        std::to_string(o.t) + " outside the window");
      const std::size_t h = std::min(static_cast<std::size_t>(o.t / 60.0), kHours - 1);
      sum[h] += o.x;
      ++count[h];
    }
    for (std::size_t h = 0; h < kHours; ++h)
      if (count[h] > 0) grid[d][h] = sum[h] / static_cast<double>(count[h]);
  }
  return grid;
}

std::vector<double> fill_and_impute(const HourlyGrid& grid, const std::vector<double>& medians) {
  std::vector<double> out;
  out.reserve(grid.size() * kHours);
  for (std::size_t d = 0; d < grid.size(); ++d) {
    HourlyRow row = grid[d];
    for (std::size_t h = 1; h < kHours; ++h)
      if (!row[h]) row[h] = row[h - 1];
    for (std::size_t h = kHours - 1; h-- > 0;)
      if (!row[h]) row[h] = row[h + 1];
    if (!row[0]) {
      if (d >= medians.size() || !std::isfinite(medians[d]))
        throw DataError("fill_and_impute: no training median for variable " + std::string(cohort::variable_name(d)));
      row.fill(medians[d]);
    }
    for (const auto& v : row) out.push_back(*v);
  }
  return out;
}

std::vector<double> training_medians(const cohort::Cohort& c) {
  if (!c.is_split()) throw UsageError("training_medians: cohort must be split");
  std::vector<std::vector<double>> values(cohort::kNumVariables);
  for (std::size_t i : c.indices(cohort::Split::kTrain))
    for (std::size_t d = 0; d < cohort::kNumVariables && d < c.encounters[i].series.size(); ++d)
      for (const auto& o : c.encounters[i].series[d]) values[d].push_back(o.x);
  std::vector<double> medians(cohort::kNumVariables);
  for (std::size_t d = 0; d < cohort::kNumVariables; ++d) {
    auto& v = values[d];
    if (v.empty())
      throw DataError("training_medians: no training observations for " + std::string(cohort::variable_name(d)));
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    medians[d] = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  return medians;
}

std::vector<std::string> feature_names() {
  std::vector<std::string> names;
  for (std::size_t d = 0; d < cohort::kNumVariables; ++d)
    for (std::size_t h = 0; h < kHours; ++h)
      names.push_back(std::string(cohort::variable_short_name(d)) + "_h" + std::to_string(h));
  return names;
}

namespace {

cohort::Cohort to_raw_scale(cohort::Cohort c) {
  for (auto& e : c.encounters)
    for (std::size_t d = 0; d < e.series.size(); ++d)
      for (auto& o : e.series[d]) o.x = o.x * c.standardization[d].std + c.standardization[d].mean;
  return c;
}

}  // namespace

cluster::FeatureMatrix baseline_matrix(const cohort::Cohort& c, const BaselineOptions& options) {
  if (!c.is_split()) throw UsageError("baseline_matrix: cohort must be split");
  if (!c.is_standardized()) throw UsageError("baseline_matrix: cohort must be standardized");
  const cohort::Cohort raw = options.raw_scale ? to_raw_scale(c) : cohort::Cohort{};
  const cohort::Cohort& src = options.raw_scale ? raw : c;
  const std::vector<double> medians = training_medians(src);
  const std::size_t m = src.encounters.size();
  cluster::FeatureMatrix x(m, kFeatures);
  x.columns = feature_names();
  std::vector<std::string> errors(m);
#pragma omp parallel for schedule(static) if (m > 64)
  for (std::size_t i = 0; i < m; ++i) {
    try {
      const std::vector<double> row = fill_and_impute(hourly_resample(src.encounters[i]), medians);
      std::copy(row.begin(), row.end(), x.data.begin() + static_cast<std::ptrdiff_t>(i * kFeatures));
    } catch (const DataError& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!errors[i].empty()) throw DataError(errors[i]);
    x.ids[i] = src.encounters[i].id;
  }
  return x;
}

}  // namespace din::baseline
