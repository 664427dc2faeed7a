#include "din/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "din/errors.hpp"
#include "din/random.hpp"

namespace din::train {

using ad::Tensor;

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw UsageError("train: learning rate must be >= 0");
  if (batch_size == 0) throw UsageError("train: batch size must be positive");
  if (max_epochs == 0) throw UsageError("train: max epochs must be positive");
  if (patience == 0) throw UsageError("train: patience must be >= 1");
  if (!(clip_norm > 0.0)) throw UsageError("train: clip norm must be positive");
}

nlohmann::json TrainReport::to_json(bool include_timing) const {
  nlohmann::json j{{"train_loss", train_loss},
                   {"validation_loss", validation_loss},
                   {"best_epoch", best_epoch},
                   {"best_validation_loss", best_validation_loss},
                   {"epochs_run", epochs_run},
                   {"stopped_early", stopped_early}};
  if (include_timing) j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw UsageError("EarlyStopping: patience must be >= 1");
}

bool EarlyStopping::update(std::size_t epoch, double loss) {
  improved_ = !seen_ || loss < best_loss_;
  if (improved_) {
    seen_ = true;
    best_loss_ = loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return false;
  }
  return ++since_best_ >= patience_;
}

Adam::Adam(const std::vector<Tensor>& like, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {
  for (const Tensor& t : like) {
    m_.emplace_back(t.shape(), 0.0);
    v_.emplace_back(t.shape(), 0.0);
  }
}

void Adam::step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw UsageError("Adam: parameter count changed");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    auto g = grads[k].data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  double ss = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) ss += v * v;
  const double norm = std::sqrt(ss);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= s;
  }
  return norm;
}

namespace {

double tensor_norm(const Tensor& t) {
  double ss = 0.0;
  for (double v : t.data()) ss += v * v;
  return std::sqrt(ss);
}

[[noreturn]] void abort_training(std::size_t epoch, std::size_t batch, const model::ModelParams& params,
                                 const std::string& what) {
  std::string worst;
  double worst_norm = -1.0;
  for (const auto& [name, t] : params.named()) {
    const double n = tensor_norm(*t);
    if (!std::isfinite(n) || n > worst_norm) {
      worst = name;
      worst_norm = n;
      if (!std::isfinite(n)) break;
    }
  }
  std::ostringstream msg;
  msg << "training diverged at epoch " << epoch << ", batch " << batch << ": " << what << " (largest parameter "
      << worst << ", norm " << worst_norm << ")";
  throw NumericalError(msg.str());
}

std::vector<const cohort::Encounter*> pointers(const cohort::Cohort& c, const std::vector<std::size_t>& idx) {
  std::vector<const cohort::Encounter*> out;
  for (std::size_t i : idx) out.push_back(&c.encounters[i]);
  return out;
}

double validation_loss(const model::ModelParams& params, std::span<const cohort::Encounter* const> validation,
                       model::LossAveraging averaging, std::size_t epoch) {
  double v = 0.0;
  try {
    v = model::dataset_loss(params, validation, averaging);
  } catch (const NumericalError& e) {
    abort_training(epoch, 0, params, std::string("validation: ") + e.what());
  }
  if (!std::isfinite(v)) abort_training(epoch, 0, params, "non-finite validation loss");
  return v;
}

}  // namespace

TrainResult train(const cohort::Cohort& cohort, model::ModelParams params, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  params.config.validate();
  if (!cohort.is_split()) throw UsageError("train: cohort must be split");
  if (!cohort.is_standardized()) throw UsageError("train: cohort must be standardized");
  std::vector<std::size_t> train_idx = cohort.indices(cohort::Split::kTrain);
  const std::vector<const cohort::Encounter*> validation = pointers(cohort, cohort.indices(cohort::Split::kValidation));
  if (train_idx.empty() || validation.empty()) throw DataError("train: training and validation splits must be non-empty");

  const auto start = std::chrono::steady_clock::now();
  TrainResult result{params, {}};
  TrainReport& report = result.report;
  EarlyStopping stopper(config.patience);

  const double initial = validation_loss(params, validation, config.averaging, 0);
  report.validation_loss.push_back(initial);
  stopper.update(0, initial);

  std::vector<Tensor*> slots;
  for (auto& [name, t] : params.named()) slots.push_back(t);
  Adam adam(params.tensors(), config.learning_rate);
  Rng rng(derive_seed(config.seed, 0x7472616eULL));

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0, weight_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t begin = 0; begin < train_idx.size(); begin += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(train_idx.size(), begin + config.batch_size);
      const std::vector<const cohort::Encounter*> batch =
          pointers(cohort, std::vector<std::size_t>(train_idx.begin() + begin, train_idx.begin() + end));
      std::vector<Tensor> grads;
      double loss = 0.0;
      try {
        ad::Graph g;
        model::BoundModel bm = model::bind(g, params, true);
        model::Forward f = model::forward(g, bm, params.config, batch, config.averaging);
        loss = f.loss.value().item();
        g.backward(f.loss);
        for (const ad::Var& v : bm.vars()) grads.push_back(v.grad());
      } catch (const NumericalError& e) {
        abort_training(epoch, batch_no, params, e.what());
      }
      const double norm = clip_global_norm(grads, config.clip_norm);
      if (!std::isfinite(loss) || !std::isfinite(norm)) abort_training(epoch, batch_no, params, "non-finite gradient");
      adam.step(slots, grads);

      double weight = static_cast<double>(batch.size());
      if (config.averaging == model::LossAveraging::kPooled) {
        weight = 0.0;
        for (const auto* e : batch) weight += static_cast<double>(e->num_observations());
      }
      loss_sum += loss * weight;
      weight_sum += weight;
    }

    const double val = validation_loss(params, validation, config.averaging, epoch);
    report.train_loss.push_back(loss_sum / weight_sum);
    report.validation_loss.push_back(val);
    report.epochs_run = epoch;
    const bool stop = stopper.update(epoch, val);
    if (stopper.improved()) result.params = params;
    if (on_epoch) on_epoch({epoch, report.train_loss.back(), val, stopper.improved()});
    if (stop) {
      report.stopped_early = true;
      break;
    }
  }
  report.best_epoch = stopper.best_epoch();
  report.best_validation_loss = stopper.best_loss();
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace din::train
