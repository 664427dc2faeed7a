#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "din/features.hpp"
#include "din/kmeans.hpp"

namespace din::cli {

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// `# config_hash=<hash>` line, header `encounter_id,<columns>`, one row per id.
std::string features_csv(const cluster::FeatureMatrix& x, const std::string& hash);
/// Skips `#` lines. Throws DataError naming the file and line on malformed rows.
cluster::FeatureMatrix read_features(const std::filesystem::path& path);

struct LabelRow {
  std::string id;
  std::size_t cluster = 0;  // 1-based
  std::vector<double> distances;
};

/// `encounter_id,cluster,dist_1..dist_k`, clusters 1-based.
std::string labels_csv(const std::vector<LabelRow>& rows, std::size_t k, const std::string& hash);
std::vector<LabelRow> read_labels(const std::filesystem::path& path);

nlohmann::json centroids_json(const cluster::ClusterModel& model, const std::vector<std::string>& columns,
                              const std::string& hash);
cluster::ClusterModel read_centroids(const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace din::cli
