#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "din/cohort.hpp"
#include "din/trainer.hpp"

namespace din::cli {

/// Every setting that influences an output. Paths are kept out so the
/// config hash only changes when results can.
struct Settings {
  std::uint64_t seed = 7;

  std::size_t regimes = 3;
  std::size_t per_regime = 200;
  double noise_scale = 1.0;

  cohort::SplitFractions fractions;
  cohort::PlausibleRanges ranges = cohort::PlausibleRanges::defaults();

  std::size_t grid_points = 25;
  double kappa = 10.0;
  std::size_t hidden = 32;

  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  double clip_norm = 5.0;
  std::string loss_averaging = "pooled";

  std::size_t k = 0;  // 0: not set
  bool gap = false;
  std::string k_range = "1..8";
  std::size_t references = 10;
  std::size_t restarts = 32;
  std::size_t max_iter = 300;
  double tol = 1e-10;
  std::string split = "all";
  std::string fit_split = "train";
  std::string gap_split = "validation";
  std::size_t silhouette_cap = 0;  // 0: exact
  bool raw_scale = false;

  void validate() const;
  train::TrainConfig train_config() const;
  std::vector<std::size_t> parsed_k_range() const;
};

nlohmann::json to_json(const Settings& s);

/// Overwrites fields present in `j`. Unknown keys and wrong types throw UsageError.
void apply_json(Settings& s, const nlohmann::json& j);
Settings load_settings(const std::filesystem::path& path);

/// FNV-1a (64-bit, hex) over the command name and the serialized settings.
std::string config_hash(std::string_view command, const Settings& s);

/// Parses "a..b" or a comma list "2,3,5" into an ascending list.
std::vector<std::size_t> parse_k_range(std::string_view text);

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };
/// From DIN_LOG_LEVEL (error, warn, info, debug); info when unset.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

}  // namespace din::cli
