#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "din/cohort.hpp"
#include "din/model.hpp"

namespace din::checkpoint {

inline constexpr int kFormatVersion = 1;

struct Checkpoint {
  model::ModelParams params;
  std::vector<cohort::VariableStats> standardization;
  cohort::SplitFractions fractions;
  std::string config_hash;
};

nlohmann::json to_json(const Checkpoint& c);
/// Validates the format tag, version and every parameter shape against the
/// stored model configuration. Throws DataError on any mismatch.
Checkpoint from_json(const nlohmann::json& j);

void save(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load(const std::filesystem::path& path);

}  // namespace din::checkpoint
