#include "csv_io.hpp"

#include <fstream>
#include <sstream>

#include "din/errors.hpp"
#include "din/numfmt.hpp"

namespace din::cli {

using nlohmann::json;
namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path() && !fs::exists(path.parent_path()))
    throw DataError("output directory '" + path.parent_path().string() + "' does not exist");
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "': invalid JSON: " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

namespace {

std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

struct CsvReader {
  fs::path path;
  std::ifstream in;
  std::size_t line_no = 0;

  explicit CsvReader(const fs::path& p) : path(p), in(p) {
    if (!in) throw DataError("cannot open '" + p.string() + "'");
  }

  /// Next non-comment, non-blank line with any trailing CR removed.
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  }

  double number(const std::string& cell, const char* what) const {
    const auto v = parse_double(cell);
    if (!v || !std::isfinite(*v)) fail(std::string("invalid ") + what + " '" + cell + "'");
    return *v;
  }
};

}  // namespace

std::string features_csv(const cluster::FeatureMatrix& x, const std::string& hash) {
  std::string out = hash_line(hash) + "encounter_id";
  for (std::size_t j = 0; j < x.cols; ++j) out += "," + (j < x.columns.size() ? x.columns[j] : "f" + std::to_string(j + 1));
  out += '\n';
  for (std::size_t i = 0; i < x.rows; ++i) {
    out += x.ids[i];
    for (std::size_t j = 0; j < x.cols; ++j) out += "," + format_double(x.at(i, j));
    out += '\n';
  }
  return out;
}

cluster::FeatureMatrix read_features(const fs::path& path) {
  CsvReader r(path);
  std::string line;
  if (!r.next(line)) throw DataError("'" + path.string() + "': no header");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "encounter_id")
    r.fail("header must start with encounter_id followed by feature columns");
  cluster::FeatureMatrix x;
  x.cols = header.size() - 1;
  x.columns.assign(header.begin() + 1, header.end());
  while (r.next(line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      r.fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    if (cells[0].empty()) r.fail("empty encounter_id");
    x.ids.push_back(cells[0]);
    for (std::size_t j = 1; j < cells.size(); ++j) x.data.push_back(r.number(cells[j], "feature value"));
    ++x.rows;
  }
  if (x.rows == 0) throw DataError("'" + path.string() + "': no feature rows");
  return x;
}

std::string labels_csv(const std::vector<LabelRow>& rows, std::size_t k, const std::string& hash) {
  std::string out = hash_line(hash) + "encounter_id,cluster";
  for (std::size_t c = 1; c <= k; ++c) out += ",dist_" + std::to_string(c);
  out += '\n';
  for (const LabelRow& r : rows) {
    out += r.id + "," + std::to_string(r.cluster);
    for (double d : r.distances) out += "," + format_double(d);
    out += '\n';
  }
  return out;
}

std::vector<LabelRow> read_labels(const fs::path& path) {
  CsvReader r(path);
  std::string line;
  if (!r.next(line)) throw DataError("'" + path.string() + "': no header");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "encounter_id" || header[1] != "cluster")
    r.fail("header must be encounter_id,cluster,dist_1..dist_k");
  std::vector<LabelRow> rows;
  while (r.next(line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) r.fail("wrong number of fields");
    LabelRow row{cells[0], static_cast<std::size_t>(r.number(cells[1], "cluster")), {}};
    for (std::size_t j = 2; j < cells.size(); ++j) row.distances.push_back(r.number(cells[j], "distance"));
    rows.push_back(std::move(row));
  }
  return rows;
}

json centroids_json(const cluster::ClusterModel& m, const std::vector<std::string>& columns, const std::string& hash) {
  json rows = json::array();
  for (std::size_t c = 0; c < m.k; ++c) {
    const auto v = m.centroid(c);
    rows.push_back(std::vector<double>(v.begin(), v.end()));
  }
  return {{"format", "din-centroids"}, {"version", 1},          {"config_hash", hash},
          {"k", m.k},                  {"dim", m.dim},          {"columns", columns},
          {"inertia", m.inertia},      {"iterations", m.iterations}, {"centroids", rows}};
}

cluster::ClusterModel read_centroids(const fs::path& path) {
  const json j = read_json(path);
  try {
    if (j.at("format") != "din-centroids") throw DataError("'" + path.string() + "': not a centroid file");
    cluster::ClusterModel m;
    m.k = j.at("k");
    m.dim = j.at("dim");
    m.inertia = j.at("inertia");
    m.iterations = j.at("iterations");
    const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (rows.size() != m.k || m.k == 0) throw DataError("'" + path.string() + "': centroid count does not match k");
    for (const auto& r : rows) {
      if (r.size() != m.dim) throw DataError("'" + path.string() + "': centroid length does not match dim");
      m.centroids.insert(m.centroids.end(), r.begin(), r.end());
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "': malformed centroid file: " + e.what());
  }
}

}  // namespace din::cli
