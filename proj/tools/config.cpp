#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "din/errors.hpp"
#include "din/model.hpp"

namespace din::cli {

using nlohmann::json;

void Settings::validate() const {
  fractions.validate();
  ranges.validate();
  if (regimes < 1) throw UsageError("regimes must be >= 1");
  if (per_regime == 0) throw UsageError("per-regime must be positive");
  if (!(noise_scale >= 0.0)) throw UsageError("noise-scale must be >= 0");
  if (grid_points < 2) throw UsageError("grid-points must be >= 2");
  if (!(kappa > 1.0)) throw UsageError("kappa must exceed 1");
  if (hidden == 0) throw UsageError("hidden must be positive");
  train_config().validate();
  parsed_k_range();
  if (references == 0) throw UsageError("references must be >= 1");
  if (restarts == 0) throw UsageError("restarts must be >= 1");
  if (max_iter == 0) throw UsageError("max-iter must be >= 1");
  for (const std::string* s : {&fit_split, &gap_split})
    if (!cohort::parse_split(*s)) throw UsageError("unknown split '" + *s + "'");
  if (split != "all" && !cohort::parse_split(split)) throw UsageError("unknown split '" + split + "'");
}

train::TrainConfig Settings::train_config() const {
  train::TrainConfig t;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.max_epochs = epochs;
  t.patience = patience;
  t.seed = seed;
  t.clip_norm = clip_norm;
  t.averaging = model::parse_averaging(loss_averaging);
  return t;
}

std::vector<std::size_t> Settings::parsed_k_range() const { return parse_k_range(k_range); }

std::vector<std::size_t> parse_k_range(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v == 0)
      throw UsageError("invalid k range '" + std::string(text) + "'");
    return v;
  };
  std::vector<std::size_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::size_t a = number(text.substr(0, dots)), b = number(text.substr(dots + 2));
    if (b < a) throw UsageError("invalid k range '" + std::string(text) + "'");
    for (std::size_t k = a; k <= b; ++k) out.push_back(k);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(number(text.substr(start, comma - start)));
    if (out.size() > 1 && out.back() <= out[out.size() - 2])
      throw UsageError("k range must be ascending: '" + std::string(text) + "'");
    start = comma + 1;
  }
  return out;
}

json to_json(const Settings& s) {
  json ranges = json::object();
  for (std::size_t d = 0; d < cohort::kNumVariables; ++d)
    ranges[std::string(cohort::variable_name(d))] = {s.ranges.ranges[d].min, s.ranges.ranges[d].max};
  return {{"seed", s.seed},
          {"regimes", s.regimes},
          {"per_regime", s.per_regime},
          {"noise_scale", s.noise_scale},
          {"split_fractions", {s.fractions.train, s.fractions.validation, s.fractions.test}},
          {"ranges", ranges},
          {"grid_points", s.grid_points},
          {"kappa", s.kappa},
          {"hidden", s.hidden},
          {"learning_rate", s.learning_rate},
          {"batch_size", s.batch_size},
          {"epochs", s.epochs},
          {"patience", s.patience},
          {"clip_norm", s.clip_norm},
          {"loss_averaging", s.loss_averaging},
          {"k", s.k},
          {"gap", s.gap},
          {"k_range", s.k_range},
          {"references", s.references},
          {"restarts", s.restarts},
          {"max_iter", s.max_iter},
          {"tol", s.tol},
          {"split", s.split},
          {"fit_split", s.fit_split},
          {"gap_split", s.gap_split},
          {"silhouette_cap", s.silhouette_cap},
          {"raw_scale", s.raw_scale}};
}

void apply_json(Settings& s, const json& j) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  const json known = to_json(s);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw UsageError("config: unknown key '" + key + "'");
  try {
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("seed", s.seed);
    take("regimes", s.regimes);
    take("per_regime", s.per_regime);
    take("noise_scale", s.noise_scale);
    if (j.contains("split_fractions")) {
      const auto f = j.at("split_fractions").get<std::vector<double>>();
      if (f.size() != 3) throw UsageError("config: split_fractions needs 3 values");
      s.fractions = {f[0], f[1], f[2]};
    }
    if (j.contains("ranges")) {
      for (const auto& [name, r] : j.at("ranges").items()) {
        const auto d = cohort::variable_index(name);
        if (!d) throw UsageError("config: unknown variable '" + name + "' in ranges");
        const auto lohi = r.get<std::vector<double>>();
        if (lohi.size() != 2) throw UsageError("config: range for '" + name + "' needs [min, max]");
        s.ranges.ranges[*d] = {lohi[0], lohi[1]};
      }
    }
    take("grid_points", s.grid_points);
    take("kappa", s.kappa);
    take("hidden", s.hidden);
    take("learning_rate", s.learning_rate);
    take("batch_size", s.batch_size);
    take("epochs", s.epochs);
    take("patience", s.patience);
    take("clip_norm", s.clip_norm);
    take("loss_averaging", s.loss_averaging);
    take("k", s.k);
    take("gap", s.gap);
    take("k_range", s.k_range);
    take("references", s.references);
    take("restarts", s.restarts);
    take("max_iter", s.max_iter);
    take("tol", s.tol);
    take("split", s.split);
    take("fit_split", s.fit_split);
    take("gap_split", s.gap_split);
    take("silhouette_cap", s.silhouette_cap);
    take("raw_scale", s.raw_scale);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path.string() + "': " + e.what());
  }
  Settings s;
  apply_json(s, j);
  return s;
}

std::string config_hash(std::string_view command, const Settings& s) {
  const std::string text = std::string(command) + '\n' + to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LogLevel log_level() {
  const char* env = std::getenv("DIN_LOG_LEVEL");
  if (!env) return LogLevel::kInfo;
  const std::string v = env;
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& message) {
  if (level > log_level()) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "[din " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace din::cli
