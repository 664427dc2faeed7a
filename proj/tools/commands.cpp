#include "commands.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "csv_io.hpp"
#include "din/baseline.hpp"
#include "din/checkpoint.hpp"
#include "din/cluster_metrics.hpp"
#include "din/errors.hpp"
#include "din/gap.hpp"
#include "din/interp.hpp"
#include "din/kmeans.hpp"
#include "din/model.hpp"
#include "din/numfmt.hpp"
#include "din/synth.hpp"
#include "din/trainer.hpp"

namespace din::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// File arguments. Kept apart from Settings so they never reach the hash.
struct Paths {
  std::string cohort, manifest, checkpoint, features, centroids;
  std::string din_features, baseline_features;
  std::string out, out_labels, out_checkpoint, out_report, out_manifest, out_metrics, out_centroids;
  std::vector<double> fractions;
  bool report_timing = false;
};

struct Context {
  std::string command;
  Settings settings;
  Paths paths;
  std::string hash;
};

std::string hash_comment(const Context& ctx) { return "config_hash=" + ctx.hash; }

std::vector<const cohort::Encounter*> pointers(const cohort::Cohort& c, std::span<const std::size_t> rows) {
  std::vector<const cohort::Encounter*> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(&c.encounters[i]);
  return out;
}

/// Rows of the cohort selected by `split` ("all" or a split name).
std::vector<std::size_t> select_rows(const cohort::Cohort& c, const std::string& split) {
  if (split == "all") {
    std::vector<std::size_t> all(c.encounters.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  return c.indices(*cohort::parse_split(split));
}

cohort::Cohort load_split_cohort(const Context& ctx) {
  if (ctx.paths.cohort.empty()) throw UsageError("--cohort is required");
  return cohort::temporal_split(cohort::ingest_csv(fs::path(ctx.paths.cohort), ctx.settings.ranges),
                                ctx.settings.fractions);
}

/// Cohort prepared with the split and scaling stored in a checkpoint.
cohort::Cohort load_for_checkpoint(const Context& ctx, const checkpoint::Checkpoint& ck) {
  if (ctx.paths.cohort.empty()) throw UsageError("--cohort is required");
  cohort::Cohort c = cohort::temporal_split(cohort::ingest_csv(fs::path(ctx.paths.cohort), ctx.settings.ranges),
                                            ck.fractions);
  return cohort::apply_standardization(std::move(c), ck.standardization);
}

checkpoint::Checkpoint load_checkpoint(const Context& ctx) {
  if (ctx.paths.checkpoint.empty()) throw UsageError("--checkpoint is required");
  return checkpoint::load(ctx.paths.checkpoint);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// ---- synth / prepare ------------------------------------------------------

void cmd_synth(const Context& ctx) {
  const Settings& s = ctx.settings;
  require(ctx.paths.out, "--out");
  cohort::SynthConfig cfg;
  cfg.regimes = cohort::default_regimes(s.regimes);
  cfg.per_regime = s.per_regime;
  cfg.seed = s.seed;
  cfg.noise_scale = s.noise_scale;
  cfg.ranges = s.ranges;
  const cohort::SyntheticCohort out = cohort::synthesize(cfg);

  std::ostringstream csv;
  cohort::write_csv(csv, out.cohort, hash_comment(ctx));
  write_atomic(ctx.paths.out, csv.str());
  if (!ctx.paths.out_labels.empty()) {
    std::string labels = "# " + hash_comment(ctx) + "\nencounter_id,regime\n";
    for (std::size_t i = 0; i < out.labels.size(); ++i)
      labels += out.cohort.encounters[i].id + "," + std::to_string(out.labels[i]) + "\n";
    write_atomic(ctx.paths.out_labels, labels);
  }
  log(LogLevel::kInfo, "synth: " + std::to_string(out.cohort.encounters.size()) + " encounters");
}

json manifest_with_hash(const cohort::Cohort& c, const Context& ctx) {
  json j = cohort::manifest(c, ctx.settings.fractions);
  j["config_hash"] = ctx.hash;
  return j;
}

void cmd_prepare(const Context& ctx) {
  require(ctx.paths.out, "--out");
  const cohort::Cohort c = cohort::standardize(load_split_cohort(ctx));
  write_json(ctx.paths.out, manifest_with_hash(c, ctx));
}

// ---- train / embed / reconstruct / interp --------------------------------

model::ModelConfig model_config(const Settings& s) {
  model::ModelConfig m;
  m.grid.points = s.grid_points;
  m.kappa = s.kappa;
  m.hidden = s.hidden;
  m.validate();
  return m;
}

void cmd_train(const Context& ctx) {
  const Settings& s = ctx.settings;
  require(ctx.paths.out_checkpoint, "--out-checkpoint");
  const cohort::Cohort c = cohort::standardize(load_split_cohort(ctx));
  const train::TrainConfig tc = s.train_config();
  model::ModelParams init = model::ModelParams::init(model_config(s), s.seed);
  log(LogLevel::kInfo, "train: " + std::to_string(init.num_parameters()) + " parameters, " +
                           std::to_string(c.indices(cohort::Split::kTrain).size()) + " training encounters");

  const train::TrainResult result = train::train(c, std::move(init), tc, [](const train::EpochRecord& r) {
    log(LogLevel::kDebug, "epoch " + std::to_string(r.epoch) + " train " + format_double(r.train_loss) +
                              " validation " + format_double(r.validation_loss) + (r.improved ? " *" : ""));
  });

  checkpoint::save(ctx.paths.out_checkpoint, {result.params, c.standardization, s.fractions, ctx.hash});
  if (!ctx.paths.out_report.empty()) {
    write_json(ctx.paths.out_report, {{"format", "din-train-report"},
                                      {"config_hash", ctx.hash},
                                      {"config", to_json(s)},
                                      {"report", result.report.to_json(ctx.paths.report_timing)}});
  }
  if (!ctx.paths.out_manifest.empty()) write_json(ctx.paths.out_manifest, manifest_with_hash(c, ctx));
  log(LogLevel::kInfo, "train: best validation loss " + format_double(result.report.best_validation_loss) +
                           " at epoch " + std::to_string(result.report.best_epoch));
}

void cmd_embed(const Context& ctx) {
  require(ctx.paths.out, "--out");
  const checkpoint::Checkpoint ck = load_checkpoint(ctx);
  const cohort::Cohort c = load_for_checkpoint(ctx, ck);
  const auto rows = select_rows(c, ctx.settings.split);
  if (rows.empty()) throw DataError("embed: split '" + ctx.settings.split + "' has no encounters");
  const auto enc = pointers(c, rows);
  const ad::Tensor z = model::embed(ck.params, enc);

  cluster::FeatureMatrix x(rows.size(), z.cols());
  x.columns.resize(x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) x.columns[j] = "h_" + std::to_string(j + 1);
  for (std::size_t i = 0; i < x.rows; ++i) {
    x.ids[i] = enc[i]->id;
    for (std::size_t j = 0; j < x.cols; ++j) x.at(i, j) = z.at(i, j);
  }
  write_atomic(ctx.paths.out, features_csv(x, ctx.hash));
}

void cmd_reconstruct(const Context& ctx) {
  require(ctx.paths.out, "--out");
  const checkpoint::Checkpoint ck = load_checkpoint(ctx);
  const cohort::Cohort c = load_for_checkpoint(ctx, ck);
  const auto rows = select_rows(c, ctx.settings.split);
  const cohort::Cohort raw = cohort::temporal_split(
      cohort::ingest_csv(fs::path(ctx.paths.cohort), ctx.settings.ranges), ck.fractions);

  std::vector<std::vector<std::vector<double>>> rec(rows.size());
  std::vector<std::string> errors(rows.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      rec[r] = model::reconstruct(ck.params, c.encounters[rows[r]]);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw NumericalError("reconstruct: " + e);

  std::string out = "# " + hash_comment(ctx) + "\nencounter_id,variable,t_minutes,raw,reconstructed,diff\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const cohort::Encounter& e = raw.encounters[rows[r]];
    for (std::size_t d = 0; d < cohort::kNumVariables; ++d) {
      const cohort::VariableStats st = ck.standardization[d];
      for (std::size_t i = 0; i < e.series[d].size(); ++i) {
        const double value = e.series[d][i].x;
        const double back = rec[r][d][i] * st.std + st.mean;
        out += e.id + "," + std::string(cohort::variable_name(d)) + "," + format_double(e.series[d][i].t) + "," +
               format_double(value) + "," + format_double(back) + "," + format_double(value - back) + "\n";
      }
    }
  }
  write_atomic(ctx.paths.out, out);
}

void cmd_interp(const Context& ctx) {
  require(ctx.paths.out, "--out");
  std::optional<checkpoint::Checkpoint> ck;
  cohort::Cohort c;
  interp::InterpParams params;
  interp::ReferenceGrid grid;
  if (!ctx.paths.checkpoint.empty()) {
    ck = load_checkpoint(ctx);
    c = load_for_checkpoint(ctx, *ck);
    params = ck->params.interp_params();
    grid = ck->params.config.grid;
  } else {
    c = cohort::standardize(load_split_cohort(ctx));
    const model::ModelConfig m = model_config(ctx.settings);
    grid = m.grid;
    params = interp::init_interp_params(cohort::kNumVariables, m.kappa, grid);
  }
  std::string out = "# " + hash_comment(ctx) + "\nencounter_id,t_minutes,variable,smooth,transient,intensity\n";
  for (std::size_t i : select_rows(c, ctx.settings.split)) {
    const interp::Representation rep = interp::represent(c.encounters[i], grid, params);
    for (std::size_t t = 0; t < rep.times.size(); ++t)
      for (std::size_t d = 0; d < cohort::kNumVariables; ++d)
        out += c.encounters[i].id + "," + format_double(rep.times[t]) + "," + std::string(cohort::variable_name(d)) +
               "," + format_double(rep.smooth.at(t, d)) + "," + format_double(rep.transient.at(t, d)) + "," +
               format_double(rep.intensity.at(t, d)) + "\n";
  }
  write_atomic(ctx.paths.out, out);
}

void cmd_baseline(const Context& ctx) {
  require(ctx.paths.out, "--out");
  const cohort::Cohort c = cohort::standardize(load_split_cohort(ctx));
  const cluster::FeatureMatrix all = baseline::baseline_matrix(c, {ctx.settings.raw_scale});
  const auto rows = select_rows(c, ctx.settings.split);
  write_atomic(ctx.paths.out, features_csv(all.subset(rows), ctx.hash));
}

// ---- clustering -----------------------------------------------------------

cluster::KMeansConfig kmeans_config(const Settings& s, std::size_t k) {
  cluster::KMeansConfig c;
  c.k = k;
  c.restarts = s.restarts;
  c.max_iter = s.max_iter;
  c.tol = s.tol;
  c.seed = s.seed;
  return c;
}

/// Split of every feature row, looked up by encounter id in a manifest.
std::vector<cohort::Split> row_splits(const cluster::FeatureMatrix& x, const fs::path& manifest_path) {
  std::map<std::string, cohort::Split> by_id;
  for (const auto& [id, split] : cohort::manifest_assignment(read_json(manifest_path))) by_id[id] = split;
  std::vector<cohort::Split> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto it = by_id.find(x.ids[i]);
    if (it == by_id.end())
      throw DataError("encounter '" + x.ids[i] + "' is not in manifest '" + manifest_path.string() + "'");
    out[i] = it->second;
  }
  return out;
}

std::vector<std::size_t> rows_in(const std::vector<cohort::Split>& splits, cohort::Split s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

/// Silhouette and DBI over the non-empty clusters; null where undefined.
json cluster_quality(const cluster::FeatureMatrix& x, std::span<const std::size_t> labels, std::size_t k,
                     const Settings& s) {
  std::vector<bool> present(k, false);
  for (std::size_t l : labels) present[l] = true;
  std::vector<std::size_t> remap(k, k);
  std::size_t used = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (present[c]) remap[c] = used++;
  std::vector<std::size_t> compact(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) compact[i] = remap[labels[i]];

  json out{{"n", x.rows}, {"clusters", used}, {"silhouette", nullptr}, {"dbi", nullptr}};
  if (used < 2) return out;
  cluster::SilhouetteOptions opts;
  if (s.silhouette_cap > 0) opts.sample_cap = s.silhouette_cap;
  opts.seed = s.seed;
  out["silhouette"] = cluster::silhouette(x, compact, used, opts).mean;
  try {
    out["dbi"] = cluster::davies_bouldin(cluster::cluster_stats(x, compact, used));
  } catch (const NumericalError&) {
    // coincident centroids: DBI undefined
  }
  return out;
}

/// Labels for every row: k-means labels on the fit rows, nearest centroid elsewhere.
struct Fitted {
  cluster::ClusterModel model;
  std::vector<std::size_t> labels;
  std::vector<double> distances;  // rows x k
};

Fitted fit_and_label(const cluster::FeatureMatrix& x, std::span<const std::size_t> fit_rows,
                     const cluster::KMeansConfig& cfg) {
  const cluster::FeatureMatrix fit = x.subset(fit_rows);
  cluster::KMeansResult km = cluster::kmeans(fit, cfg);
  cluster::Assignment a = cluster::assign_phenotype(x, km.model);
  for (std::size_t r = 0; r < fit_rows.size(); ++r) a.labels[fit_rows[r]] = km.labels[r];
  return {std::move(km.model), std::move(a.labels), std::move(a.distances)};
}

std::vector<LabelRow> label_rows(const cluster::FeatureMatrix& x, const std::vector<std::size_t>& labels,
                                 const std::vector<double>& distances, std::size_t k) {
  std::vector<LabelRow> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    out[i].id = x.ids[i];
    out[i].cluster = labels[i] + 1;
    out[i].distances.assign(distances.begin() + static_cast<std::ptrdiff_t>(i * k),
                            distances.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
  }
  return out;
}

void cmd_cluster(const Context& ctx) {
  const Settings& s = ctx.settings;
  require(ctx.paths.features, "--features");
  require(ctx.paths.out_labels, "--out-labels");
  if (s.gap == (s.k != 0)) throw UsageError("cluster: give exactly one of --k or --gap");
  const cluster::FeatureMatrix x = read_features(ctx.paths.features);

  std::vector<cohort::Split> splits;
  std::vector<std::size_t> fit_rows, gap_rows;
  if (!ctx.paths.manifest.empty()) {
    splits = row_splits(x, ctx.paths.manifest);
    fit_rows = rows_in(splits, *cohort::parse_split(s.fit_split));
    gap_rows = rows_in(splits, *cohort::parse_split(s.gap_split));
  } else {
    fit_rows.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) fit_rows[i] = i;
    gap_rows = fit_rows;
  }
  if (fit_rows.empty()) throw DataError("cluster: no rows in fit split '" + s.fit_split + "'");

  json metrics{{"format", "din-cluster-metrics"}, {"config_hash", ctx.hash}};
  std::size_t k = s.k;
  if (s.gap) {
    if (gap_rows.empty()) throw DataError("cluster: no rows in gap split '" + s.gap_split + "'");
    cluster::GapConfig g;
    g.k_range = s.parsed_k_range();
    g.references = s.references;
    g.kmeans = kmeans_config(s, 1);
    g.seed = s.seed;
    const cluster::GapResult gap = cluster::gap_statistic(x.subset(gap_rows), g);
    k = gap.chosen_k;
    json curve = json::array();
    for (const cluster::GapPoint& p : gap.curve)
      curve.push_back({{"k", p.k}, {"log_w", p.log_w}, {"reference_log_w", p.reference_log_w}, {"gap", p.gap},
                       {"s", p.s}});
    metrics["gap_curve"] = curve;
    log(LogLevel::kInfo, "cluster: gap statistic selects k = " + std::to_string(k));
  }

  const Fitted f = fit_and_label(x, fit_rows, kmeans_config(s, k));
  metrics["k"] = k;
  metrics["inertia"] = f.model.inertia;
  metrics["iterations"] = f.model.iterations;
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t r : fit_rows) ++sizes[f.labels[r]];
  metrics["cluster_sizes"] = sizes;

  json quality = json::object();
  const auto add_quality = [&](const std::string& name, const std::vector<std::size_t>& rows) {
    if (rows.empty()) return;
    std::vector<std::size_t> labels;
    for (std::size_t r : rows) labels.push_back(f.labels[r]);
    quality[name] = cluster_quality(x.subset(rows), labels, k, s);
  };
  if (splits.empty()) {
    add_quality("all", fit_rows);
  } else {
    for (cohort::Split sp : {cohort::Split::kTrain, cohort::Split::kValidation, cohort::Split::kTest})
      add_quality(std::string(cohort::split_name(sp)), rows_in(splits, sp));
  }
  metrics["quality"] = quality;
  metrics["silhouette_mean"] = quality[splits.empty() ? "all" : s.fit_split]["silhouette"];
  metrics["dbi"] = quality[splits.empty() ? "all" : s.fit_split]["dbi"];

  write_atomic(ctx.paths.out_labels, labels_csv(label_rows(x, f.labels, f.distances, k), k, ctx.hash));
  if (!ctx.paths.out_metrics.empty()) write_json(ctx.paths.out_metrics, metrics);
  if (!ctx.paths.out_centroids.empty())
    write_json(ctx.paths.out_centroids, centroids_json(f.model, x.columns, ctx.hash));
}

void cmd_assign(const Context& ctx) {
  require(ctx.paths.centroids, "--centroids");
  require(ctx.paths.features, "--features");
  require(ctx.paths.out, "--out");
  const cluster::ClusterModel model = read_centroids(ctx.paths.centroids);
  const cluster::FeatureMatrix x = read_features(ctx.paths.features);
  if (x.cols != model.dim)
    throw DataError("assign: features have " + std::to_string(x.cols) + " columns but centroids have " +
                    std::to_string(model.dim));
  const cluster::Assignment a = cluster::assign_phenotype(x, model);
  write_atomic(ctx.paths.out, labels_csv(label_rows(x, a.labels, a.distances, a.k), a.k, ctx.hash));
}

void cmd_compare(const Context& ctx) {
  const Settings& s = ctx.settings;
  require(ctx.paths.din_features, "--din-features");
  require(ctx.paths.baseline_features, "--baseline-features");
  require(ctx.paths.manifest, "--manifest");
  require(ctx.paths.out, "--out");
  if (s.k == 0) throw UsageError("compare: --k is required");

  json methods = json::object();
  for (const auto& [name, path] : {std::pair{"din", ctx.paths.din_features},
                                   std::pair{"baseline", ctx.paths.baseline_features}}) {
    const cluster::FeatureMatrix x = read_features(path);
    const auto splits = row_splits(x, ctx.paths.manifest);
    const auto fit_rows = rows_in(splits, cohort::Split::kTrain);
    if (fit_rows.empty()) throw DataError(std::string("compare: no training rows in '") + path + "'");
    const Fitted f = fit_and_label(x, fit_rows, kmeans_config(s, s.k));
    json per_split = json::object();
    for (cohort::Split sp : {cohort::Split::kTrain, cohort::Split::kValidation, cohort::Split::kTest}) {
      const auto rows = rows_in(splits, sp);
      if (rows.empty()) {
        per_split[std::string(cohort::split_name(sp))] = {{"n", 0}, {"silhouette", nullptr}, {"dbi", nullptr}};
        continue;
      }
      std::vector<std::size_t> labels;
      for (std::size_t r : rows) labels.push_back(f.labels[r]);
      per_split[std::string(cohort::split_name(sp))] = cluster_quality(x.subset(rows), labels, s.k, s);
    }
    methods[name] = {{"features", x.cols}, {"splits", per_split}};
  }
  write_json(ctx.paths.out, {{"format", "din-comparison"}, {"config_hash", ctx.hash}, {"k", s.k}, {"methods", methods}});
}

// ---- argument parsing -----------------------------------------------------

/// Settings from `--config FILE` if present, else defaults.
Settings initial_settings(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      return load_settings(args[i + 1]);
    }
    if (args[i].rfind("--config=", 0) == 0) return load_settings(args[i].substr(9));
  }
  return {};
}

using Handler = std::function<void(const Context&)>;

int report(int code, const std::string& message) {
  log(LogLevel::kError, message);
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Context ctx;
  try {
    ctx.settings = initial_settings(args);
  } catch (const Error& e) {
    return report(kExitUsage, e.what());
  }
  Settings& s = ctx.settings;
  Paths& p = ctx.paths;
  std::string config_path;

  CLI::App app{"Deep interpolation network phenotyping pipeline"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::vector<std::pair<CLI::App*, Handler>> commands;

  const auto sub = [&](const char* name, const char* help, Handler h) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("--config", config_path, "JSON settings file; flags override it");
    c->add_option("--seed", s.seed, "random seed")->capture_default_str();
    commands.emplace_back(c, std::move(h));
    return c;
  };
  const auto cohort_opts = [&](CLI::App* c) {
    c->add_option("--cohort", p.cohort, "observation CSV")->required();
    c->add_option("--split-fractions", p.fractions, "train validation test fractions")->expected(3);
  };
  const auto model_opts = [&](CLI::App* c) {
    c->add_option("--grid-points", s.grid_points, "reference grid size T")->capture_default_str();
    c->add_option("--kappa", s.kappa, "transient bandwidth multiplier")->capture_default_str();
    c->add_option("--hidden", s.hidden, "context vector size H")->capture_default_str();
  };
  const auto kmeans_opts = [&](CLI::App* c) {
    c->add_option("--restarts", s.restarts, "k-means restarts")->capture_default_str();
    c->add_option("--max-iter", s.max_iter, "Lloyd iterations per restart")->capture_default_str();
    c->add_option("--tol", s.tol, "centroid movement tolerance")->capture_default_str();
    c->add_option("--silhouette-cap", s.silhouette_cap, "subsample silhouette to this many rows (0: exact)")
        ->capture_default_str();
  };
  const auto split_opt = [&](CLI::App* c) {
    c->add_option("--split", s.split, "all, train, validation or test")->capture_default_str();
  };

  CLI::App* synth = sub("synth", "generate a synthetic cohort", cmd_synth);
  synth->add_option("--regimes", s.regimes, "number of regimes")->capture_default_str();
  synth->add_option("--per-regime", s.per_regime, "encounters per regime")->capture_default_str();
  synth->add_option("--noise-scale", s.noise_scale, "multiplies every noise sd")->capture_default_str();
  synth->add_option("--out", p.out, "cohort CSV")->required();
  synth->add_option("--out-labels", p.out_labels, "ground-truth regime CSV");

  CLI::App* prepare = sub("prepare", "split and standardize a cohort, write its manifest", cmd_prepare);
  cohort_opts(prepare);
  prepare->add_option("--out", p.out, "manifest JSON")->required();

  CLI::App* trn = sub("train", "train the interpolation autoencoder", cmd_train);
  cohort_opts(trn);
  model_opts(trn);
  trn->add_option("--lr", s.learning_rate, "learning rate")->capture_default_str();
  trn->add_option("--batch-size", s.batch_size, "mini-batch size")->capture_default_str();
  trn->add_option("--epochs", s.epochs, "maximum epochs")->capture_default_str();
  trn->add_option("--patience", s.patience, "early-stopping patience")->capture_default_str();
  trn->add_option("--clip-norm", s.clip_norm, "global gradient-norm clip")->capture_default_str();
  trn->add_option("--loss-averaging", s.loss_averaging, "pooled or per_encounter")->capture_default_str();
  trn->add_option("--out-checkpoint", p.out_checkpoint, "checkpoint JSON")->required();
  trn->add_option("--out-report", p.out_report, "training report JSON");
  trn->add_option("--out-manifest", p.out_manifest, "cohort manifest JSON");
  trn->add_flag("--report-timing", p.report_timing, "include wall-clock time in the report");

  CLI::App* embed = sub("embed", "write context vectors", cmd_embed);
  embed->add_option("--checkpoint", p.checkpoint, "checkpoint JSON")->required();
  embed->add_option("--cohort", p.cohort, "observation CSV")->required();
  split_opt(embed);
  embed->add_option("--out", p.out, "feature CSV")->required();

  CLI::App* recon = sub("reconstruct", "write raw and reconstructed observations", cmd_reconstruct);
  recon->add_option("--checkpoint", p.checkpoint, "checkpoint JSON")->required();
  recon->add_option("--cohort", p.cohort, "observation CSV")->required();
  split_opt(recon);
  recon->add_option("--out", p.out, "reconstruction CSV")->required();

  CLI::App* itp = sub("interp", "write the interpolated representation", cmd_interp);
  itp->add_option("--checkpoint", p.checkpoint, "checkpoint JSON (default: initial parameters)");
  cohort_opts(itp);
  model_opts(itp);
  split_opt(itp);
  itp->add_option("--out", p.out, "representation CSV")->required();

  CLI::App* base = sub("baseline", "write the 36 hourly baseline features", cmd_baseline);
  cohort_opts(base);
  split_opt(base);
  base->add_flag("--raw-scale", s.raw_scale, "features on the measurement scale");
  base->add_option("--out", p.out, "feature CSV")->required();

  CLI::App* clus = sub("cluster", "fit k-means and label every row", cmd_cluster);
  clus->add_option("--features", p.features, "feature CSV")->required();
  clus->add_option("--manifest", p.manifest, "cohort manifest JSON for split-aware fitting");
  clus->add_option("--k", s.k, "number of clusters");
  clus->add_flag("--gap", s.gap, "choose k with the gap statistic");
  clus->add_option("--k-range", s.k_range, "candidate k, a..b or a,b,c")->capture_default_str();
  clus->add_option("--references", s.references, "gap reference sets B")->capture_default_str();
  clus->add_option("--fit-split", s.fit_split, "split k-means is fitted on")->capture_default_str();
  clus->add_option("--gap-split", s.gap_split, "split the gap statistic runs on")->capture_default_str();
  kmeans_opts(clus);
  clus->add_option("--out-labels", p.out_labels, "labels CSV")->required();
  clus->add_option("--out-metrics", p.out_metrics, "metrics JSON");
  clus->add_option("--out-centroids", p.out_centroids, "centroid JSON");

  CLI::App* cmp = sub("compare", "silhouette and DBI for both feature sets per split", cmd_compare);
  cmp->add_option("--din-features", p.din_features, "embedding CSV")->required();
  cmp->add_option("--baseline-features", p.baseline_features, "baseline feature CSV")->required();
  cmp->add_option("--manifest", p.manifest, "cohort manifest JSON")->required();
  cmp->add_option("--k", s.k, "number of clusters")->required();
  kmeans_opts(cmp);
  cmp->add_option("--out", p.out, "comparison JSON")->required();

  CLI::App* asg = sub("assign", "label rows by their nearest centroid", cmd_assign);
  asg->add_option("--centroids", p.centroids, "centroid JSON")->required();
  asg->add_option("--features", p.features, "feature CSV")->required();
  asg->add_option("--out", p.out, "labels CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!p.fractions.empty()) s.fractions = {p.fractions[0], p.fractions[1], p.fractions[2]};
    s.validate();
    for (auto& [cmd, handler] : commands) {
      if (!cmd->parsed()) continue;
      ctx.command = cmd->get_name();
      ctx.hash = config_hash(ctx.command, s);
      log(LogLevel::kDebug, ctx.command + ": config_hash=" + ctx.hash);
      handler(ctx);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    return report(kExitUsage, e.what());
  } catch (const NumericalError& e) {
    return report(kExitNumerical, e.what());
  } catch (const DataError& e) {
    return report(kExitData, e.what());
  } catch (const ShapeError& e) {
    return report(kExitData, e.what());
  } catch (const json::exception& e) {
    return report(kExitData, e.what());
  } catch (const std::exception& e) {
    return report(kExitData, e.what());
  }
}

}  // namespace din::cli
