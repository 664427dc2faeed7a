#include <doctest.h>

#include <cmath>

#include "din/baseline.hpp"
#include "din/errors.hpp"
#include "din/synth.hpp"

using namespace din;
using namespace din::baseline;

namespace {

cohort::Encounter encounter(std::vector<cohort::Series> series) {
  series.resize(cohort::kNumVariables);
  return {"e", std::move(series), 0};
}

HourlyRow row(std::initializer_list<std::optional<double>> v) {
  HourlyRow r;
  std::copy(v.begin(), v.end(), r.begin());
  return r;
}

std::vector<double> fill_one(const HourlyRow& r, double median = 0.0) {
  return fill_and_impute(HourlyGrid{r}, {median});
}

cohort::Cohort prepared(std::size_t per_regime, std::uint64_t seed) {
  cohort::SynthConfig cfg;
  cfg.regimes = cohort::default_regimes(3);
  cfg.per_regime = per_regime;
  cfg.seed = seed;
  return cohort::standardize(cohort::temporal_split(cohort::synthesize(cfg).cohort, {}));
}

}  // namespace

TEST_CASE("hourly_resample examples") {
  const HourlyGrid g = hourly_resample(encounter({{}, {}, {{10.0, 80.0}, {40.0, 90.0}}}));
  CHECK(g[2][0] == 85.0);
  for (std::size_t h = 1; h < kHours; ++h) CHECK_FALSE(g[2][h].has_value());

  const HourlyGrid ends = hourly_resample(encounter({{{0.0, 1.0}, {330.0, 2.0}}}));
  for (std::size_t h = 1; h < 5; ++h) CHECK_FALSE(ends[0][h].has_value());

  const HourlyGrid edge = hourly_resample(encounter({{{60.0, 3.0}, {360.0, 4.0}}}));
  CHECK_FALSE(edge[0][0].has_value());
  CHECK(edge[0][1] == 3.0);
  CHECK(edge[0][5] == 4.0);

  CHECK_THROWS_AS(hourly_resample(encounter({{{361.0, 1.0}}})), DataError);
}

TEST_CASE("fill_and_impute examples") {
  CHECK(fill_one(row({85.0, {}, {}, 100.0, {}, {}})) == std::vector<double>{85, 85, 85, 100, 100, 100});
  CHECK(fill_one(row({{}, {}, 90.0, {}, {}, {}})) == std::vector<double>{90, 90, 90, 90, 90, 90});
  CHECK(fill_one(row({{}, {}, {}, {}, {}, {}}), 37.0) == std::vector<double>{37, 37, 37, 37, 37, 37});
  CHECK_THROWS_AS(fill_and_impute(HourlyGrid{row({{}, {}, {}, {}, {}, {}})}, {}), DataError);
}

TEST_CASE("forward fill runs before backward fill") {
  // Backward-first would give [2, 2, 5, ...]; forward-first gives [2, 5, 5, ...].
  CHECK(fill_one(row({2.0, {}, 5.0, {}, {}, {}})) == std::vector<double>{2, 2, 5, 5, 5, 5});
  CHECK(fill_one(row({{}, 5.0, {}, {}, {}, {}})) == std::vector<double>{5, 5, 5, 5, 5, 5});
  CHECK(fill_one(row({{}, 5.0, {}, 7.0, {}, {}})) == std::vector<double>{5, 5, 5, 7, 7, 7});
}

TEST_CASE("feature names") {
  const auto names = feature_names();
  REQUIRE(names.size() == 36);
  CHECK(names[0] == "sbp_h0");
  CHECK(names[12] == "hr_h0");
  CHECK(names[23] == "temp_h5");
  CHECK(names[35] == "rr_h5");
}

TEST_CASE("training medians") {
  cohort::Cohort c;
  for (int i = 0; i < 3; ++i) {
    cohort::Encounter e = encounter({});
    for (auto& s : e.series) s.push_back({0.0, static_cast<double>(10 * i)});
    e.series[0].push_back({30.0, 100.0});
    e.id = "e" + std::to_string(i);
    e.admit_order = static_cast<std::size_t>(i);
    c.encounters.push_back(e);
  }
  c = cohort::temporal_split(c, {0.34, 0.33, 0.33});
  const auto m = training_medians(c);  // train split is encounter 0 only
  CHECK(m[0] == 50.0);
  CHECK(m[1] == 0.0);
}

TEST_CASE("baseline_matrix shape, finiteness and row independence") {
  const cohort::Cohort c = prepared(20, 3);
  const cluster::FeatureMatrix x = baseline_matrix(c);
  CHECK(x.rows == 60);
  CHECK(x.cols == 36);
  CHECK(x.columns == feature_names());
  for (double v : x.data) CHECK(std::isfinite(v));

  cohort::Cohort dup = c;
  dup.encounters[1].series = dup.encounters[0].series;
  const cluster::FeatureMatrix xd = baseline_matrix(dup);
  for (std::size_t j = 0; j < 36; ++j) CHECK(xd.at(0, j) == xd.at(1, j));

  // Swapping two test encounters swaps their rows and nothing else.
  cohort::Cohort swapped = c;
  std::swap(swapped.encounters[58], swapped.encounters[59]);
  const cluster::FeatureMatrix xs = baseline_matrix(swapped);
  for (std::size_t j = 0; j < 36; ++j) {
    CHECK(xs.at(58, j) == x.at(59, j));
    CHECK(xs.at(59, j) == x.at(58, j));
    CHECK(xs.at(0, j) == x.at(0, j));
  }
}

TEST_CASE("baseline_matrix on the raw scale") {
  const cohort::Cohort c = prepared(10, 4);
  const cluster::FeatureMatrix z = baseline_matrix(c);
  const cluster::FeatureMatrix raw = baseline_matrix(c, {true});
  // Same bins, different scale: a column mapped back through the stats agrees.
  for (std::size_t i = 0; i < z.rows; ++i) {
    const double back = z.at(i, 12) * c.standardization[2].std + c.standardization[2].mean;
    CHECK(raw.at(i, 12) == doctest::Approx(back).epsilon(1e-12));
  }
  cohort::Cohort unsplit = c;
  unsplit.split.clear();
  CHECK_THROWS_AS(baseline_matrix(unsplit), UsageError);
}
