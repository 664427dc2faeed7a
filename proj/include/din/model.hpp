#pragma once

// The full network: interpolation -> GRU encoder -> GRU decoder ->
// re-interpolation, plus value-only helpers for embedding and reconstruction.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "din/autodiff.hpp"
#include "din/cohort.hpp"
#include "din/gru.hpp"
#include "din/interp.hpp"

namespace din::model {

struct ModelConfig {
  std::size_t num_variables = cohort::kNumVariables;
  interp::ReferenceGrid grid;
  double kappa = 10.0;
  std::size_t hidden = 32;

  void validate() const;
};

struct ModelParams {
  ModelConfig config;
  ad::Tensor log_bandwidth;  // 1 x D
  ad::Tensor mixing_logits;  // D x D
  seq2seq::GruCell encoder;  // 3D -> H
  seq2seq::GruCell decoder;  // D + H -> H
  seq2seq::Projection projection;
  ad::Tensor log_theta;  // 1 x D

  /// Interpolation init as in init_interp_params, GRU and projection weights
  /// uniform(+-1/sqrt(fan_in)) from `seed`, theta_d = ln 2 / spacing^2.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  /// Every trainable tensor in a fixed order (23 entries).
  std::vector<std::pair<std::string, ad::Tensor*>> named();
  std::vector<std::pair<std::string, const ad::Tensor*>> named() const;
  std::vector<ad::Tensor> tensors() const;
  std::size_t num_parameters() const;
  interp::InterpParams interp_params() const;
};

struct BoundModel {
  ad::Var log_bandwidth, mixing_logits;
  seq2seq::GruVars encoder, decoder;
  seq2seq::ProjectionVars projection;
  ad::Var log_theta;

  /// Vars in ModelParams::named() order.
  static BoundModel from(std::span<const ad::Var> vars);
  std::vector<ad::Var> vars() const;
};

BoundModel bind(ad::Graph& g, const ModelParams& params, bool trainable);

enum class LossAveraging {
  kPooled,        // sum of squared errors over the batch / observations in the batch
  kPerEncounter,  // mean over encounters of each encounter's masked MSE
};

std::string_view averaging_name(LossAveraging a);
LossAveraging parse_averaging(std::string_view name);

struct Forward {
  ad::Var context;                 // B x H
  std::vector<ad::Var> outputs;    // per encounter, T x D
  std::vector<ad::Var> sq_errors;  // per encounter, 1 x 1
  ad::Var loss;                    // 1 x 1
};

/// Batched forward pass over `batch`. Every encounter needs at least one
/// observation.
Forward forward(ad::Graph& g, const BoundModel& m, const ModelConfig& config,
                std::span<const cohort::Encounter* const> batch, LossAveraging averaging);

/// Context vectors h_T, one row per encounter (m x H).
ad::Tensor embed(const ModelParams& params, std::span<const cohort::Encounter* const> encounters);

/// Decoder outputs (T x D) for one encounter.
ad::Tensor decoder_outputs(const ModelParams& params, const cohort::Encounter& encounter);

/// Reconstructed values at every observed time, one vector per variable.
std::vector<std::vector<double>> reconstruct(const ModelParams& params, const cohort::Encounter& encounter);

/// Sum of squared reconstruction errors and observation count.
struct LossParts {
  double squared_error = 0.0;
  std::size_t observations = 0;
};
LossParts encounter_loss(const ModelParams& params, const cohort::Encounter& encounter);

/// Loss over a set of encounters under `averaging`; each encounter is evaluated
/// independently (in parallel) and combined in index order.
double dataset_loss(const ModelParams& params, std::span<const cohort::Encounter* const> encounters,
                    LossAveraging averaging);

}  // namespace din::model
