#include "din/model.hpp"

#include <cmath>
#include <exception>

#include "din/errors.hpp"
#include "din/random.hpp"
#include "din/reinterp.hpp"

namespace din::model {

using ad::Tensor;
using ad::Var;

void ModelConfig::validate() const {
  if (num_variables == 0) throw UsageError("model: need at least one variable");
  if (hidden == 0) throw UsageError("model: hidden size must be positive");
  if (!(kappa > 1.0)) throw UsageError("model: kappa must exceed 1");
  grid.validate();
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.num_variables, h = config.hidden;
  const interp::InterpParams ip = interp::init_interp_params(d, config.kappa, config.grid);
  Rng rng(seed);
  ModelParams p;
  p.config = config;
  p.log_bandwidth = ip.log_bandwidth;
  p.mixing_logits = ip.mixing_logits;
  p.encoder = seq2seq::GruCell::init(3 * d, h, rng);
  p.decoder = seq2seq::GruCell::init(d + h, h, rng);
  p.projection = seq2seq::Projection::init(h, d, rng);
  const double dr = config.grid.spacing();
  p.log_theta = Tensor({1, d}, std::log(std::log(2.0) / (dr * dr)));
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out{{"interp.log_bandwidth", &log_bandwidth},
                                                   {"interp.mixing_logits", &mixing_logits}};
  for (auto& e : encoder.named("encoder")) out.push_back(e);
  for (auto& e : decoder.named("decoder")) out.push_back(e);
  out.emplace_back("projection.weight", &projection.weight);
  out.emplace_back("projection.bias", &projection.bias);
  out.emplace_back("reinterp.log_theta", &log_theta);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::vector<Tensor> ModelParams::tensors() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named()) out.push_back(*t);
  return out;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

interp::InterpParams ModelParams::interp_params() const { return {log_bandwidth, mixing_logits, config.kappa}; }

BoundModel BoundModel::from(std::span<const Var> v) {
  if (v.size() != 23) throw UsageError("BoundModel: expected 23 parameter vars, got " + std::to_string(v.size()));
  return {v[0],
          v[1],
          {v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]},
          {v[11], v[12], v[13], v[14], v[15], v[16], v[17], v[18], v[19]},
          {v[20], v[21]},
          v[22]};
}

std::vector<Var> BoundModel::vars() const {
  return {log_bandwidth, mixing_logits,     encoder.w_z,     encoder.u_z, encoder.b_z, encoder.w_r,
          encoder.u_r,   encoder.b_r,       encoder.w_h,     encoder.u_h, encoder.b_h, decoder.w_z,
          decoder.u_z,   decoder.b_z,       decoder.w_r,     decoder.u_r, decoder.b_r, decoder.w_h,
          decoder.u_h,   decoder.b_h,       projection.weight, projection.bias, log_theta};
}

BoundModel bind(ad::Graph& g, const ModelParams& params, bool trainable) {
  std::vector<Var> vars;
  for (const auto& [name, t] : params.named()) vars.push_back(trainable ? g.parameter(*t) : g.constant(*t));
  return BoundModel::from(vars);
}

std::string_view averaging_name(LossAveraging a) {
  return a == LossAveraging::kPooled ? "pooled" : "per_encounter";
}

LossAveraging parse_averaging(std::string_view name) {
  if (name == "pooled") return LossAveraging::kPooled;
  if (name == "per_encounter") return LossAveraging::kPerEncounter;
  throw UsageError("unknown loss averaging '" + std::string(name) + "' (expected pooled or per_encounter)");
}

namespace {

struct Encoded {
  Var context;
  std::vector<Var> outputs;
};

Encoded run_network(ad::Graph& g, const BoundModel& m, const ModelConfig& config,
                    std::span<const cohort::Encounter* const> batch) {
  if (batch.empty()) throw UsageError("forward: empty batch");
  const std::size_t steps = config.grid.points, d = config.num_variables;
  std::vector<Var> rows;
  rows.reserve(batch.size());
  for (const cohort::Encounter* e : batch) {
    if (e->series.size() != d) {
      throw ShapeError("forward: encounter '" + e->id + "' has " + std::to_string(e->series.size()) +
                       " variables, model expects " + std::to_string(d));
    }
    interp::InterpOutput io = interp::interpolate(g, *e, config.grid, m.log_bandwidth, m.mixing_logits, config.kappa);
    rows.push_back(ad::reshape(interp::encoder_inputs(io), {1, steps * 3 * d}));
  }
  Var inputs = rows.size() == 1 ? rows[0] : ad::concat(rows, 0);
  Var context = seq2seq::encode(m.encoder, inputs, steps);
  std::vector<Var> per_step = seq2seq::decode(m.decoder, m.projection, context, steps);
  Var all = ad::concat(per_step, 1);  // B x (T D), step-major
  Encoded out{context, {}};
  for (std::size_t b = 0; b < batch.size(); ++b)
    out.outputs.push_back(ad::reshape(ad::slice(all, b, b + 1, 0, steps * d), {steps, d}));
  return out;
}

}  // namespace

Forward forward(ad::Graph& g, const BoundModel& m, const ModelConfig& config,
                std::span<const cohort::Encounter* const> batch, LossAveraging averaging) {
  Encoded enc = run_network(g, m, config, batch);
  const std::vector<double> times = config.grid.times();
  Forward f{enc.context, std::move(enc.outputs), {}, {}};
  std::vector<Var> terms;
  std::size_t total_obs = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t n = batch[b]->num_observations();
    if (n == 0) throw DataError("forward: encounter '" + batch[b]->id + "' has no observations");
    Var recon = recon::reinterpolate(f.outputs[b], times, *batch[b], m.log_theta);
    Var se = recon::squared_error(*batch[b], recon);
    f.sq_errors.push_back(se);
    terms.push_back(averaging == LossAveraging::kPooled ? se : ad::scale(se, 1.0 / static_cast<double>(n)));
    total_obs += n;
  }
  Var total = terms.size() == 1 ? terms[0] : ad::sum(ad::concat(terms, 0));
  const double denom = averaging == LossAveraging::kPooled ? static_cast<double>(total_obs)
                                                           : static_cast<double>(batch.size());
  f.loss = ad::scale(total, 1.0 / denom);
  return f;
}

Tensor embed(const ModelParams& params, std::span<const cohort::Encounter* const> encounters) {
  const std::size_t m = encounters.size(), h = params.config.hidden;
  Tensor out({m, h});
  std::vector<std::exception_ptr> errors(m);
#pragma omp parallel for schedule(dynamic, 8) if (m > 16)
  for (std::size_t i = 0; i < m; ++i) {
    try {
      ad::Graph g;
      BoundModel bm = bind(g, params, false);
      const cohort::Encounter* one[] = {encounters[i]};
      Tensor ctx = run_network(g, bm, params.config, one).context.value();
      for (std::size_t j = 0; j < h; ++j) out.at(i, j) = ctx[j];
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Tensor decoder_outputs(const ModelParams& params, const cohort::Encounter& encounter) {
  ad::Graph g;
  BoundModel bm = bind(g, params, false);
  const cohort::Encounter* one[] = {&encounter};
  return run_network(g, bm, params.config, one).outputs[0].value();
}

std::vector<std::vector<double>> reconstruct(const ModelParams& params, const cohort::Encounter& encounter) {
  const std::vector<double> times = params.config.grid.times();
  return recon::reinterpolate_values(decoder_outputs(params, encounter), times, encounter, params.log_theta);
}

LossParts encounter_loss(const ModelParams& params, const cohort::Encounter& encounter) {
  ad::Graph g;
  BoundModel bm = bind(g, params, false);
  const cohort::Encounter* one[] = {&encounter};
  Forward f = forward(g, bm, params.config, one, LossAveraging::kPooled);
  return {f.sq_errors[0].value().item(), encounter.num_observations()};
}

double dataset_loss(const ModelParams& params, std::span<const cohort::Encounter* const> encounters,
                    LossAveraging averaging) {
  const std::size_t m = encounters.size();
  if (m == 0) throw UsageError("dataset_loss: no encounters");
  std::vector<LossParts> parts(m);
  std::vector<std::exception_ptr> errors(m);
#pragma omp parallel for schedule(dynamic, 4) if (m > 8)
  for (std::size_t i = 0; i < m; ++i) {
    try {
      parts[i] = encounter_loss(params, *encounters[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  double total = 0.0;
  std::size_t obs = 0;
  for (const LossParts& p : parts) {
    total += averaging == LossAveraging::kPooled ? p.squared_error
                                                 : p.squared_error / static_cast<double>(p.observations);
    obs += p.observations;
  }
  return total / (averaging == LossAveraging::kPooled ? static_cast<double>(obs) : static_cast<double>(m));
}

}  // namespace din::model
