#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace din::cohort {

inline constexpr std::size_t kNumVariables = 6;
inline constexpr double kWindowMinutes = 360.0;

/// Canonical variable order used by every tensor and feature column.
enum class Variable : std::size_t { kSbp = 0, kDbp, kHeartRate, kTemperature, kSpo2, kRespRate };

/// CSV name: sbp, dbp, heart_rate, temperature, spo2, resp_rate.
std::string_view variable_name(std::size_t d);
/// Column-prefix name: sbp, dbp, hr, temp, spo2, rr.
std::string_view variable_short_name(std::size_t d);
std::optional<std::size_t> variable_index(std::string_view name);

struct Observation {
  double t = 0.0;  // minutes since admission
  double x = 0.0;
  bool operator==(const Observation&) const = default;
};

using Series = std::vector<Observation>;

struct Encounter {
  std::string id;
  /// One series per variable; each sorted by strictly increasing t.
  std::vector<Series> series;
  std::size_t admit_order = 0;

  std::size_t num_observations() const;
  std::size_t missing_variables() const;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct PlausibleRanges {
  std::array<Range, kNumVariables> ranges;

  static PlausibleRanges defaults();
  bool contains(std::size_t d, double x) const { return x >= ranges[d].min && x <= ranges[d].max; }
  void validate() const;
};

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };
std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view name);

struct SplitFractions {
  double train = 0.55;
  double validation = 0.23;
  double test = 0.22;
  void validate() const;
};

struct VariableStats {
  double mean = 0.0;
  double std = 1.0;
};

struct IngestCounts {
  std::size_t rows_read = 0;
  std::size_t dropped_out_of_range = 0;
  std::size_t dropped_out_of_window = 0;
  std::size_t merged_duplicates = 0;
  std::size_t excluded_encounters = 0;
};

struct Cohort {
  std::vector<Encounter> encounters;
  /// Parallel to encounters once temporal_split has run.
  std::vector<Split> split;
  /// Per-variable training statistics once standardize has run.
  std::vector<VariableStats> standardization;
  IngestCounts counts;

  bool is_split() const { return !encounters.empty() && split.size() == encounters.size(); }
  bool is_standardized() const { return standardization.size() == kNumVariables; }
  std::vector<std::size_t> indices(Split s) const;
};

/// Sorts by t and averages observations sharing a timestamp. Returns the
/// number of observations merged away.
std::size_t normalize_series(Series& series);

/// Reads the observation CSV (header `encounter_id,variable,t_minutes,value`).
/// Lines starting with '#' are comments. Out-of-range values and observations
/// outside [0, 360] minutes are dropped; encounters missing two or more
/// variables entirely are excluded. Throws DataError with a line number on
/// malformed input.
Cohort ingest_csv(std::istream& in, const PlausibleRanges& ranges, std::string_view source = "<stream>");
Cohort ingest_csv(const std::filesystem::path& path, const PlausibleRanges& ranges);

/// Writes encounters in admit order; `comment`, when non-empty, is emitted
/// as a leading `# ` line.
void write_csv(std::ostream& out, const Cohort& cohort, std::string_view comment = {});

/// Per-split counts for n encounters: train and validation rounded to nearest,
/// remainder to test, each split at least one encounter.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& fractions);

/// Orders encounters by admit_order and assigns the leading block to train,
/// the next to validation and the rest to test.
Cohort temporal_split(Cohort cohort, const SplitFractions& fractions);

/// Population mean/std of every training observation, std clamped >= 1e-6.
std::vector<VariableStats> training_stats(const Cohort& cohort);

/// Z-scores every observation with training-split statistics.
Cohort standardize(Cohort cohort);
Cohort apply_standardization(Cohort cohort, const std::vector<VariableStats>& stats);

/// Split assignment, standardization stats and ingest/exclusion counts.
nlohmann::json manifest(const Cohort& cohort, const SplitFractions& fractions);

/// Reads the split assignment (encounter id -> split) from a manifest.
std::vector<std::pair<std::string, Split>> manifest_assignment(const nlohmann::json& manifest);

}  // namespace din::cohort
