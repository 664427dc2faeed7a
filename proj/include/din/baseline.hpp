#pragma once

// Hand-crafted comparison features: hourly means over the 6-hour window,
// forward fill then backward fill, then the training median for variables
// with no observations at all. 6 variables x 6 hours = 36 columns.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "din/cohort.hpp"
#include "din/features.hpp"

namespace din::baseline {

inline constexpr std::size_t kHours = 6;
inline constexpr std::size_t kFeatures = cohort::kNumVariables * kHours;

using HourlyRow = std::array<std::optional<double>, kHours>;
/// One row per variable.
using HourlyGrid = std::vector<HourlyRow>;

/// Bin h holds the mean of observations with t in [60h, 60(h+1)); t = 360
/// falls in bin 5. Throws DataError for t outside [0, 360].
HourlyGrid hourly_resample(const cohort::Encounter& encounter);

/// Forward fill, then backward fill, per variable; variables still empty take
/// the median. Returns variable-major values (variable d, hour h at d*6 + h).
/// Throws DataError if a needed median is missing or non-finite.
std::vector<double> fill_and_impute(const HourlyGrid& grid, const std::vector<double>& medians);

/// Median of every training-split observation per variable, on the scale the
/// cohort currently holds.
std::vector<double> training_medians(const cohort::Cohort& cohort);

/// Column names, `<short variable name>_h<hour>` in canonical variable order.
std::vector<std::string> feature_names();

struct BaselineOptions {
  /// Compute features (and medians) on the original measurement scale
  /// instead of the standardized one.
  bool raw_scale = false;
};

/// m x 36 matrix for every encounter of a split, standardized cohort.
cluster::FeatureMatrix baseline_matrix(const cohort::Cohort& cohort, const BaselineOptions& options = {});

}  // namespace din::baseline
