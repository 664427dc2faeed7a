#include "din/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "din/errors.hpp"
#include "din/numfmt.hpp"

namespace din::cohort {

namespace {

constexpr std::array<std::string_view, kNumVariables> kNames = {"sbp",         "dbp",  "heart_rate",
                                                                "temperature", "spo2", "resp_rate"};
constexpr std::array<std::string_view, kNumVariables> kShortNames = {"sbp", "dbp", "hr", "temp", "spo2", "rr"};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view variable_name(std::size_t d) { return kNames.at(d); }
std::string_view variable_short_name(std::size_t d) { return kShortNames.at(d); }

std::optional<std::size_t> variable_index(std::string_view name) {
  for (std::size_t d = 0; d < kNumVariables; ++d)
    if (kNames[d] == name) return d;
  return std::nullopt;
}

std::size_t Encounter::num_observations() const {
  std::size_t n = 0;
  for (const auto& s : series) n += s.size();
  return n;
}

std::size_t Encounter::missing_variables() const {
  return static_cast<std::size_t>(std::count_if(series.begin(), series.end(), [](const Series& s) { return s.empty(); }));
}

PlausibleRanges PlausibleRanges::defaults() {
  return PlausibleRanges{{{
      {40.0, 300.0},  // sbp, mmHg
      {20.0, 200.0},  // dbp, mmHg
      {20.0, 300.0},  // heart rate, bpm
      {30.0, 43.0},   // temperature, C
      {50.0, 100.0},  // spo2, %
      {4.0, 80.0},    // respiratory rate, /min
  }}};
}

void PlausibleRanges::validate() const {
  for (std::size_t d = 0; d < kNumVariables; ++d) {
    if (!(ranges[d].min < ranges[d].max)) {
      throw UsageError("plausible range for " + std::string(kNames[d]) + " must satisfy min < max");
    }
  }
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

void SplitFractions::validate() const {
  if (!(train > 0.0 && validation > 0.0 && test > 0.0)) throw UsageError("split fractions must all be positive");
  if (std::abs(train + validation + test - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");
}

std::vector<std::size_t> Cohort::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

std::size_t normalize_series(Series& series) {
  std::stable_sort(series.begin(), series.end(), [](const Observation& a, const Observation& b) { return a.t < b.t; });
  std::size_t merged = 0;
  Series out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < series.size() && series[j].t == series[i].t) sum += series[j++].x;
    out.push_back({series[i].t, sum / static_cast<double>(j - i)});
    merged += j - i - 1;
    i = j;
  }
  series = std::move(out);
  return merged;
}

Cohort ingest_csv(std::istream& in, const PlausibleRanges& ranges, std::string_view source) {
  ranges.validate();
  const std::string where(source);
  Cohort cohort;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Encounter> all;

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!header_seen) {
      if (view != "encounter_id,variable,t_minutes,value") {
        throw DataError(where + ":" + std::to_string(line_no) +
                        ": expected header 'encounter_id,variable,t_minutes,value'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != 4) {
      throw DataError(where + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string id(trim(fields[0]));
    if (id.empty()) throw DataError(where + ":" + std::to_string(line_no) + ": empty encounter_id");
    const auto var = variable_index(trim(fields[1]));
    if (!var) {
      throw DataError(where + ":" + std::to_string(line_no) + ": unknown variable '" + std::string(trim(fields[1])) +
                      "'");
    }
    const auto t = parse_double(fields[2]);
    const auto x = parse_double(fields[3]);
    if (!t || !x || !std::isfinite(*t) || !std::isfinite(*x)) {
      throw DataError(where + ":" + std::to_string(line_no) + ": t_minutes and value must be finite numbers");
    }
    ++cohort.counts.rows_read;

    auto [it, inserted] = index.try_emplace(id, all.size());
    if (inserted) {
      Encounter e;
      e.id = id;
      e.series.resize(kNumVariables);
      e.admit_order = all.size();
      all.push_back(std::move(e));
    }
    if (*t < 0.0 || *t > kWindowMinutes) {
      ++cohort.counts.dropped_out_of_window;
      continue;
    }
    if (!ranges.contains(*var, *x)) {
      ++cohort.counts.dropped_out_of_range;
      continue;
    }
    all[it->second].series[*var].push_back({*t, *x});
  }
  if (!header_seen) throw DataError(where + ": empty file");
  if (cohort.counts.rows_read == 0) throw DataError(where + ": no data rows");

  for (Encounter& e : all) {
    for (Series& s : e.series) cohort.counts.merged_duplicates += normalize_series(s);
    if (e.missing_variables() >= 2) {
      ++cohort.counts.excluded_encounters;
      continue;
    }
    cohort.encounters.push_back(std::move(e));
  }
  return cohort;
}

Cohort ingest_csv(const std::filesystem::path& path, const PlausibleRanges& ranges) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort file '" + path.string() + "'");
  return ingest_csv(in, ranges, path.string());
}

void write_csv(std::ostream& out, const Cohort& cohort, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "encounter_id,variable,t_minutes,value\n";
  std::vector<const Encounter*> ordered;
  for (const auto& e : cohort.encounters) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Encounter* a, const Encounter* b) { return a->admit_order < b->admit_order; });
  for (const Encounter* e : ordered) {
    for (std::size_t d = 0; d < e->series.size(); ++d) {
      for (const Observation& o : e->series[d]) {
        out << e->id << ',' << kNames[d] << ',' << format_double(o.t) << ',' << format_double(o.x) << '\n';
      }
    }
  }
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& fractions) {
  fractions.validate();
  if (n < 3) throw DataError("temporal split needs at least 3 encounters, got " + std::to_string(n));
  const double dn = static_cast<double>(n);
  std::size_t train = static_cast<std::size_t>(std::llround(fractions.train * dn));
  std::size_t validation = static_cast<std::size_t>(std::llround(fractions.validation * dn));
  train = std::clamp<std::size_t>(train, 1, n - 2);
  validation = std::clamp<std::size_t>(validation, 1, n - 1 - train);
  return {train, validation, n - train - validation};
}

Cohort temporal_split(Cohort cohort, const SplitFractions& fractions) {
  const auto counts = split_counts(cohort.encounters.size(), fractions);
  std::stable_sort(cohort.encounters.begin(), cohort.encounters.end(),
                   [](const Encounter& a, const Encounter& b) { return a.admit_order < b.admit_order; });
  cohort.split.assign(cohort.encounters.size(), Split::kTest);
  for (std::size_t i = 0; i < counts[0]; ++i) cohort.split[i] = Split::kTrain;
  for (std::size_t i = counts[0]; i < counts[0] + counts[1]; ++i) cohort.split[i] = Split::kValidation;
  return cohort;
}

std::vector<VariableStats> training_stats(const Cohort& cohort) {
  if (!cohort.is_split()) throw UsageError("standardize: cohort has no split assignment");
  std::vector<VariableStats> stats(kNumVariables);
  for (std::size_t d = 0; d < kNumVariables; ++d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < cohort.encounters.size(); ++i) {
      if (cohort.split[i] != Split::kTrain) continue;
      for (const auto& o : cohort.encounters[i].series[d]) {
        sum += o.x;
        ++n;
      }
    }
    if (n == 0) {
      throw DataError("variable '" + std::string(kNames[d]) + "' has no training observations; cohort unusable");
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < cohort.encounters.size(); ++i) {
      if (cohort.split[i] != Split::kTrain) continue;
      for (const auto& o : cohort.encounters[i].series[d]) ss += (o.x - mean) * (o.x - mean);
    }
    stats[d] = {mean, std::max(std::sqrt(ss / static_cast<double>(n)), 1e-6)};
  }
  return stats;
}

Cohort apply_standardization(Cohort cohort, const std::vector<VariableStats>& stats) {
  if (stats.size() != kNumVariables) throw UsageError("standardization needs one entry per variable");
  for (Encounter& e : cohort.encounters)
    for (std::size_t d = 0; d < kNumVariables; ++d)
      for (Observation& o : e.series[d]) o.x = (o.x - stats[d].mean) / stats[d].std;
  cohort.standardization = stats;
  return cohort;
}

Cohort standardize(Cohort cohort) {
  auto stats = training_stats(cohort);
  return apply_standardization(std::move(cohort), stats);
}

nlohmann::json manifest(const Cohort& cohort, const SplitFractions& fractions) {
  using nlohmann::json;
  json j;
  j["format"] = "din-cohort-manifest";
  j["version"] = 1;
  j["split_fractions"] = {{"train", fractions.train}, {"validation", fractions.validation}, {"test", fractions.test}};
  json counts = json::object();
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest})
    counts[std::string(split_name(s))] = cohort.indices(s).size();
  j["split_counts"] = counts;
  json assignment = json::array();
  for (std::size_t i = 0; i < cohort.encounters.size(); ++i) {
    assignment.push_back({{"encounter_id", cohort.encounters[i].id},
                          {"split", cohort.is_split() ? std::string(split_name(cohort.split[i])) : "unassigned"}});
  }
  j["assignment"] = assignment;
  json stats = json::array();
  for (std::size_t d = 0; d < cohort.standardization.size(); ++d) {
    stats.push_back({{"variable", kNames[d]},
                     {"mean", cohort.standardization[d].mean},
                     {"std", cohort.standardization[d].std}});
  }
  j["standardization"] = stats;
  j["ingest"] = {{"rows_read", cohort.counts.rows_read},
                 {"dropped_out_of_range", cohort.counts.dropped_out_of_range},
                 {"dropped_out_of_window", cohort.counts.dropped_out_of_window},
                 {"merged_duplicates", cohort.counts.merged_duplicates},
                 {"excluded_encounters", cohort.counts.excluded_encounters},
                 {"retained_encounters", cohort.encounters.size()}};
  return j;
}

std::vector<std::pair<std::string, Split>> manifest_assignment(const nlohmann::json& manifest) {
  std::vector<std::pair<std::string, Split>> out;
  if (!manifest.contains("assignment") || !manifest["assignment"].is_array()) {
    throw DataError("manifest has no 'assignment' array");
  }
  for (const auto& row : manifest["assignment"]) {
    const auto s = parse_split(row.at("split").get<std::string>());
    if (!s) throw DataError("manifest: unknown split '" + row.at("split").get<std::string>() + "'");
    out.emplace_back(row.at("encounter_id").get<std::string>(), *s);
  }
  return out;
}

}  // namespace din::cohort
