#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "csv_io.hpp"
#include "din/numfmt.hpp"
#include "din/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using din::cli::run;

namespace {

const bool kQuiet = [] { return setenv("DIN_LOG_LEVEL", "error", 1) == 0; }();

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("din_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(slurp(path));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> data_lines(const std::string& path) {
  std::vector<std::string> out;
  for (auto& l : lines(path))
    if (!l.empty() && l[0] != '#') out.push_back(l);
  return out;
}

/// Runs the command and captures what it logs to stderr.
struct Result {
  int code;
  std::string err;
};
Result run_capture(const std::vector<std::string>& args) {
  std::ostringstream err;
  auto* old = std::cerr.rdbuf(err.rdbuf());
  const int code = run(args);
  std::cerr.rdbuf(old);
  return {code, err.str()};
}

int synth(const TempDir& d, std::size_t regimes, std::size_t per_regime, const std::string& name = "cohort.csv",
          const std::vector<std::string>& extra = {}) {
  std::vector<std::string> a{"synth", "--regimes", std::to_string(regimes), "--per-regime",
                             std::to_string(per_regime), "--seed", "7", "--out", d / name};
  a.insert(a.end(), extra.begin(), extra.end());
  return run(a);
}

std::vector<std::string> micro_train(const TempDir& d, const std::string& cohort, const std::string& ck) {
  return {"train", "--cohort", d / cohort, "--out-checkpoint", d / ck, "--grid-points", "5", "--hidden", "3",
          "--batch-size", "8", "--epochs", "4", "--lr", "0.01"};
}

std::string features_file(const TempDir& d, const std::string& name,
                          const std::vector<std::vector<double>>& rows) {
  std::string text = "encounter_id";
  for (std::size_t j = 0; j < rows[0].size(); ++j) text += ",f" + std::to_string(j + 1);
  text += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += "r" + std::to_string(i);
    for (double v : rows[i]) text += "," + din::format_double(v);
    text += "\n";
  }
  std::ofstream(d / name) << text;
  return d / name;
}

/// Unit-sd blobs with centers on a circle of radius sep / sqrt(3), so
/// neighbouring centers of three blobs are sep apart.
std::vector<std::vector<double>> blobs(std::size_t count, std::size_t per, double sep, std::uint64_t seed) {
  din::Rng rng(seed);
  std::vector<std::vector<double>> out;
  const double radius = sep / std::sqrt(3.0);
  for (std::size_t b = 0; b < count; ++b) {
    const double angle = 2.0 * M_PI * static_cast<double>(b) / static_cast<double>(count);
    for (std::size_t i = 0; i < per; ++i)
      out.push_back({radius * std::cos(angle) + rng.normal(), radius * std::sin(angle) + rng.normal()});
  }
  return out;
}

}  // namespace

TEST_CASE("synth writes a deterministic cohort of the requested size") {
  TempDir d;
  REQUIRE(synth(d, 3, 200, "a.csv", {"--out-labels", d / "la.csv"}) == 0);
  REQUIRE(synth(d, 3, 200, "b.csv", {"--out-labels", d / "lb.csv"}) == 0);
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
  CHECK(slurp(d / "la.csv") == slurp(d / "lb.csv"));

  std::set<std::string> ids;
  for (const auto& l : data_lines(d / "a.csv")) ids.insert(l.substr(0, l.find(',')));
  ids.erase("encounter_id");
  CHECK(ids.size() == 600);
  const auto labels = data_lines(d / "la.csv");
  CHECK(labels.front() == "encounter_id,regime");
  CHECK(labels.size() == 601);
}

TEST_CASE("every output starts with the config hash") {
  TempDir d;
  REQUIRE(synth(d, 2, 10) == 0);
  const std::string first = lines(d / "cohort.csv").front();
  CHECK(first.rfind("# config_hash=", 0) == 0);
  CHECK(first.size() == std::string("# config_hash=").size() + 16);

  REQUIRE(synth(d, 2, 10, "other.csv", {"--noise-scale", "0.5"}) == 0);
  CHECK(lines(d / "other.csv").front() != first);
}

TEST_CASE("config file values apply and flags override them") {
  TempDir d;
  std::ofstream(d / "cfg.json") << R"({"per_regime": 5, "regimes": 2})";
  REQUIRE(run({"synth", "--config", d / "cfg.json", "--out", d / "c1.csv"}) == 0);
  REQUIRE(run({"synth", "--config", d / "cfg.json", "--per-regime", "7", "--out", d / "c2.csv"}) == 0);
  auto count = [&](const std::string& f) {
    std::set<std::string> ids;
    for (const auto& l : data_lines(f)) ids.insert(l.substr(0, l.find(',')));
    return ids.size() - 1;
  };
  CHECK(count(d / "c1.csv") == 10);
  CHECK(count(d / "c2.csv") == 14);

  std::ofstream(d / "bad.json") << R"({"per_regmie": 5})";
  CHECK(run_capture({"synth", "--config", d / "bad.json", "--out", d / "c3.csv"}).code == 1);
}

TEST_CASE("exit codes") {
  TempDir d;
  CHECK(run_capture({}).code == 1);
  CHECK(run_capture({"nonsense"}).code == 1);
  CHECK(run_capture({"synth", "--regimes", "abc", "--out", d / "x.csv"}).code == 1);
  CHECK(run_capture({"synth", "--regimes", "0", "--out", d / "x.csv"}).code == 1);
  CHECK(run_capture({"train", "--cohort", d / "x.csv", "--out-checkpoint", d / "ck.json", "--lr", "-1"}).code == 1);
  CHECK(run_capture({"synth", "--out", d / "missing_dir/x.csv"}).code == 2);
  CHECK_FALSE(fs::exists(d / "x.csv"));
}

TEST_CASE("train on a missing cohort names the path") {
  TempDir d;
  const Result r = run_capture({"train", "--cohort", d / "nope.csv", "--out-checkpoint", d / "ck.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("nope.csv") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "ck.json"));
}

TEST_CASE("micro training run finishes quickly and lowers the loss") {
  TempDir d;
  REQUIRE(synth(d, 2, 10) == 0);
  auto args = micro_train(d, "cohort.csv", "ck.json");
  args.insert(args.end(), {"--out-report", d / "report.json"});
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(run(args) == 0);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(60));
  const json rep = json::parse(slurp(d / "report.json"));
  CHECK(rep.at("format") == "din-train-report");
  CHECK(rep.at("config_hash").get<std::string>().size() == 16);
  const auto val = rep.at("report").at("validation_loss").get<std::vector<double>>();
  CHECK(rep.at("report").at("best_validation_loss").get<double>() < val.front());
  CHECK_FALSE(rep.at("report").contains("wall_clock_seconds"));
}

TEST_CASE("train with zero learning rate reports a constant loss") {
  TempDir d;
  REQUIRE(synth(d, 2, 10) == 0);
  auto args = micro_train(d, "cohort.csv", "ck.json");
  args.insert(args.end(), {"--lr", "0", "--patience", "10", "--out-report", d / "report.json"});
  REQUIRE(run(args) == 0);
  const json rep = json::parse(slurp(d / "report.json")).at("report");
  const auto val = rep.at("validation_loss").get<std::vector<double>>();
  const auto tr = rep.at("train_loss").get<std::vector<double>>();
  REQUIRE(val.size() == 5);
  for (double v : val) CHECK(v == val.front());
  for (double v : tr) CHECK(v == doctest::Approx(tr.front()).epsilon(1e-12));
}

TEST_CASE("embed writes H + 1 columns, deterministically") {
  TempDir d;
  REQUIRE(synth(d, 2, 10) == 0);
  auto args = micro_train(d, "cohort.csv", "ck.json");
  REQUIRE(run(args) == 0);
  REQUIRE(run({"embed", "--checkpoint", d / "ck.json", "--cohort", d / "cohort.csv", "--split", "train", "--out",
               d / "e1.csv"}) == 0);
  REQUIRE(run({"embed", "--checkpoint", d / "ck.json", "--cohort", d / "cohort.csv", "--split", "train", "--out",
               d / "e2.csv"}) == 0);
  CHECK(slurp(d / "e1.csv") == slurp(d / "e2.csv"));
  const auto rows = data_lines(d / "e1.csv");
  CHECK(rows.front() == "encounter_id,h_1,h_2,h_3");
  CHECK(rows.size() == 1 + 11);  // 55% of 20
}

TEST_CASE("embed gives identical rows for encounters with identical observations") {
  TempDir d;
  std::string csv = "encounter_id,variable,t_minutes,value\n";
  const std::pair<const char*, double> vitals[] = {{"sbp", 120.0},        {"dbp", 70.0}, {"heart_rate", 80.0},
                                                   {"temperature", 37.0}, {"spo2", 95.0}, {"resp_rate", 18.0}};
  for (const std::string id : {"a", "b", "c"}) {
    const double shift = id == "c" ? 2.0 : 0.0;
    for (const auto& [v, base] : vitals)
      for (double t : {15.0, 130.0, 290.0})
        csv += id + "," + v + "," + din::format_double(t) + "," + din::format_double(base + shift + t / 100.0) + "\n";
  }
  std::ofstream(d / "tiny.csv") << csv;
  // Fractions keep a in train, b in validation, c in test.
  REQUIRE(run({"train", "--cohort", d / "tiny.csv", "--out-checkpoint", d / "ck.json", "--grid-points", "5",
               "--hidden", "4", "--epochs", "1", "--split-fractions", "0.34", "0.33", "0.33"}) == 0);
  REQUIRE(run({"embed", "--checkpoint", d / "ck.json", "--cohort", d / "tiny.csv", "--out", d / "e.csv"}) == 0);
  const auto rows = data_lines(d / "e.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].substr(2) == rows[2].substr(2));
  CHECK(rows[1].substr(2) != rows[3].substr(2));
}

TEST_CASE("cluster persists k centroids and assign reproduces its labels") {
  TempDir d;
  const std::string f = features_file(d, "f.csv", blobs(7, 12, 8.0, 3));
  REQUIRE(run({"cluster", "--features", f, "--k", "7", "--out-labels", d / "lab.csv", "--out-metrics",
               d / "met.json", "--out-centroids", d / "cen.json"}) == 0);
  const json cen = json::parse(slurp(d / "cen.json"));
  CHECK(cen.at("k") == 7);
  CHECK(cen.at("centroids").size() == 7);
  const json met = json::parse(slurp(d / "met.json"));
  for (const char* key : {"k", "silhouette_mean", "dbi", "inertia", "config_hash"}) CHECK(met.contains(key));

  REQUIRE(run({"assign", "--centroids", d / "cen.json", "--features", f, "--out", d / "asg.csv"}) == 0);
  const auto a = data_lines(d / "asg.csv"), b = data_lines(d / "lab.csv");
  CHECK(a == b);
  CHECK(a.front() == "encounter_id,cluster,dist_1,dist_2,dist_3,dist_4,dist_5,dist_6,dist_7");
  CHECK(din::cli::split_csv_line(a[1]).size() == 2 + 7);
}

TEST_CASE("cluster requires exactly one of k and gap") {
  TempDir d;
  const std::string f = features_file(d, "f.csv", blobs(2, 10, 8.0, 1));
  CHECK(run_capture({"cluster", "--features", f, "--out-labels", d / "l.csv"}).code == 1);
  CHECK(run_capture({"cluster", "--features", f, "--k", "2", "--gap", "--out-labels", d / "l.csv"}).code == 1);
  CHECK(run_capture({"cluster", "--features", f, "--k", "50", "--out-labels", d / "l.csv"}).code == 1);
}

TEST_CASE("cluster --gap finds three blobs and one blob") {
  TempDir d;
  const std::string three = features_file(d, "three.csv", blobs(3, 50, 10.0, 11));
  REQUIRE(run({"cluster", "--features", three, "--gap", "--k-range", "1..8", "--restarts", "8", "--out-labels",
               d / "l.csv", "--out-metrics", d / "m.json"}) == 0);
  const json m = json::parse(slurp(d / "m.json"));
  CHECK(m.at("k") == 3);
  CHECK(m.at("gap_curve").size() == 8);

  const std::string one = features_file(d, "one.csv", blobs(1, 150, 0.0, 12));
  REQUIRE(run({"cluster", "--features", one, "--gap", "--restarts", "8", "--out-labels", d / "l1.csv",
               "--out-metrics", d / "m1.json"}) == 0);
  CHECK(json::parse(slurp(d / "m1.json")).at("k") == 1);
}

TEST_CASE("malformed feature CSV reports the row") {
  TempDir d;
  std::ofstream(d / "bad.csv") << "# comment\nencounter_id,f1,f2\nr0,1,2\nr1,1,oops\n";
  const Result r = run_capture({"cluster", "--features", d / "bad.csv", "--k", "1", "--out-labels", d / "l.csv"});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.csv:4") != std::string::npos);

  std::ofstream(d / "short.csv") << "encounter_id,f1,f2\nr0,1,2\nr1,1\n";
  const Result s = run_capture({"cluster", "--features", d / "short.csv", "--k", "1", "--out-labels", d / "l.csv"});
  CHECK(s.code == 2);
  CHECK(s.err.find("short.csv:3") != std::string::npos);
}

TEST_CASE("assign rejects a feature dimension mismatch") {
  TempDir d;
  const std::string f = features_file(d, "f.csv", blobs(2, 10, 8.0, 5));
  REQUIRE(run({"cluster", "--features", f, "--k", "2", "--out-labels", d / "l.csv", "--out-centroids",
               d / "c.json"}) == 0);
  const std::string g = features_file(d, "g.csv", {{1, 2, 3}, {4, 5, 6}});
  CHECK(run_capture({"assign", "--centroids", d / "c.json", "--features", g, "--out", d / "a.csv"}).code == 2);
  CHECK_FALSE(fs::exists(d / "a.csv"));
}

TEST_CASE("compare on identical features gives identical metrics") {
  TempDir d;
  REQUIRE(synth(d, 3, 10) == 0);
  REQUIRE(run({"prepare", "--cohort", d / "cohort.csv", "--out", d / "m.json"}) == 0);
  REQUIRE(run({"baseline", "--cohort", d / "cohort.csv", "--out", d / "b.csv"}) == 0);
  REQUIRE(run({"compare", "--din-features", d / "b.csv", "--baseline-features", d / "b.csv", "--manifest",
               d / "m.json", "--k", "3", "--out", d / "cmp.json"}) == 0);
  const json c = json::parse(slurp(d / "cmp.json"));
  CHECK(c.at("methods").at("din").at("splits") == c.at("methods").at("baseline").at("splits"));
  for (const char* split : {"train", "validation", "test"}) {
    const json cell = c.at("methods").at("din").at("splits").at(split);
    CHECK(cell.contains("silhouette"));
    CHECK(cell.contains("dbi"));
  }
  CHECK(c.at("methods").at("baseline").at("features") == 36);
}

TEST_CASE("reconstruct columns and diff") {
  TempDir d;
  REQUIRE(synth(d, 2, 10) == 0);
  REQUIRE(run(micro_train(d, "cohort.csv", "ck.json")) == 0);
  REQUIRE(run({"reconstruct", "--checkpoint", d / "ck.json", "--cohort", d / "cohort.csv", "--split", "test", "--out",
               d / "r.csv"}) == 0);
  const auto rows = data_lines(d / "r.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows.front() == "encounter_id,variable,t_minutes,raw,reconstructed,diff");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = din::cli::split_csv_line(rows[i]);
    REQUIRE(cells.size() == 6);
    const double raw = *din::parse_double(cells[3]), rec = *din::parse_double(cells[4]);
    CHECK(*din::parse_double(cells[5]) == raw - rec);
  }
}

TEST_CASE("training lowers the reconstruction error on a noise-free cohort") {
  TempDir d;
  REQUIRE(synth(d, 1, 24, "cohort.csv", {"--noise-scale", "0"}) == 0);
  const std::vector<std::string> common{"train", "--cohort", d / "cohort.csv", "--grid-points", "9", "--hidden", "6",
                                        "--batch-size", "8"};
  auto untrained = common;
  untrained.insert(untrained.end(), {"--lr", "0", "--epochs", "1", "--out-checkpoint", d / "u.json"});
  auto trained = common;
  trained.insert(trained.end(), {"--lr", "0.005", "--epochs", "15", "--out-checkpoint", d / "t.json"});
  REQUIRE(run(untrained) == 0);
  REQUIRE(run(trained) == 0);
  auto mean_abs_diff = [&](const std::string& ck) {
    REQUIRE(run({"reconstruct", "--checkpoint", d / ck, "--cohort", d / "cohort.csv", "--out", d / "r.csv"}) == 0);
    double sum = 0.0;
    std::size_t n = 0;
    const auto rows = data_lines(d / "r.csv");
    for (std::size_t i = 1; i < rows.size(); ++i, ++n)
      sum += std::abs(*din::parse_double(din::cli::split_csv_line(rows[i])[5]));
    return sum / static_cast<double>(n);
  };
  CHECK(mean_abs_diff("t.json") < mean_abs_diff("u.json"));
}

TEST_CASE("pipeline composition on a 100-encounter cohort") {
  TempDir d;
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(synth(d, 2, 50) == 0);
  REQUIRE(run({"train", "--cohort", d / "cohort.csv", "--out-checkpoint", d / "ck.json", "--out-manifest",
               d / "m.json", "--epochs", "3", "--batch-size", "16", "--hidden", "8"}) == 0);
  REQUIRE(run({"embed", "--checkpoint", d / "ck.json", "--cohort", d / "cohort.csv", "--out", d / "e.csv"}) == 0);
  REQUIRE(run({"cluster", "--features", d / "e.csv", "--manifest", d / "m.json", "--k", "2", "--out-labels",
               d / "l.csv", "--out-centroids", d / "c.json", "--out-metrics", d / "met.json"}) == 0);
  REQUIRE(run({"assign", "--centroids", d / "c.json", "--features", d / "e.csv", "--out", d / "a.csv"}) == 0);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::minutes(5));
  CHECK(data_lines(d / "a.csv") == data_lines(d / "l.csv"));
  CHECK(data_lines(d / "a.csv").size() == 101);
  const json met = json::parse(slurp(d / "met.json"));
  CHECK(met.at("quality").contains("test"));
}

TEST_CASE("interp and baseline outputs have the documented shape") {
  TempDir d;
  REQUIRE(synth(d, 2, 5) == 0);
  REQUIRE(run({"interp", "--cohort", d / "cohort.csv", "--grid-points", "4", "--split", "test", "--out",
               d / "i.csv"}) == 0);
  const auto irows = data_lines(d / "i.csv");
  CHECK(irows.front() == "encounter_id,t_minutes,variable,smooth,transient,intensity");
  CHECK(irows.size() == 1 + 2 * 4 * 6);  // 22% of 10 -> 2 test encounters

  REQUIRE(run({"baseline", "--cohort", d / "cohort.csv", "--out", d / "b.csv"}) == 0);
  const auto brows = data_lines(d / "b.csv");
  CHECK(brows.size() == 11);
  CHECK(din::cli::split_csv_line(brows.front()).size() == 37);
  CHECK(brows.front().rfind("encounter_id,sbp_h0,", 0) == 0);
}
