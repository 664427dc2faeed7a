#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "din/cohort.hpp"
#include "din/model.hpp"

namespace din::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  model::LossAveraging averaging = model::LossAveraging::kPooled;

  /// learning_rate may be 0 (a no-op run); everything else must be positive.
  void validate() const;
};

struct TrainReport {
  /// Index e holds epoch e + 1.
  std::vector<double> train_loss;
  /// Index e holds epoch e; entry 0 is the untrained model.
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  double wall_clock_seconds = 0.0;

  /// Timing is left out unless asked for, so identical runs serialize identically.
  nlohmann::json to_json(bool include_timing = false) const;
};

/// Tracks the best loss seen; signals a stop after `patience` consecutive
/// epochs without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  /// Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double loss);
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  bool improved() const { return improved_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  std::size_t since_best_ = 0;
  bool seen_ = false;
  bool improved_ = false;
};

class Adam {
 public:
  Adam(const std::vector<ad::Tensor>& like, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step(std::vector<ad::Tensor*>& params, const std::vector<ad::Tensor>& grads);
  std::size_t steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<ad::Tensor> m_, v_;
};

/// Rescales grads in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::vector<ad::Tensor>& grads, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool improved = false;
};

struct TrainResult {
  model::ModelParams params;  // best-validation snapshot
  TrainReport report;
};

/// Trains on the cohort's training split and early-stops on its validation
/// split. The cohort must be split and standardized.
TrainResult train(const cohort::Cohort& cohort, model::ModelParams params, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace din::train
