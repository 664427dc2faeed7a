#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "din/autodiff.hpp"
#include "din/random.hpp"

namespace din::seq2seq {

/// Single-layer GRU cell (Cho et al. gate convention), batched over rows:
///   z  = sigmoid(x W_z + h U_z + b_z)
///   r  = sigmoid(x W_r + h U_r + b_r)
///   h~ = tanh(x W_h + (r * h) U_h + b_h)
///   h' = z * h + (1 - z) * h~
/// Input weights are In x H, recurrent weights H x H, biases 1 x H.
struct GruCell {
  ad::Tensor w_z, u_z, b_z;
  ad::Tensor w_r, u_r, b_r;
  ad::Tensor w_h, u_h, b_h;

  std::size_t input_dim() const { return w_z.rows(); }
  std::size_t hidden_dim() const { return u_z.rows(); }

  static GruCell zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static GruCell init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  std::vector<std::pair<std::string, ad::Tensor*>> named(const std::string& prefix);
  std::vector<std::pair<std::string, const ad::Tensor*>> named(const std::string& prefix) const;
};

/// Affine map from decoder state to outputs: o = s W + b, W is H x D.
struct Projection {
  ad::Tensor weight;
  ad::Tensor bias;

  static Projection zeros(std::size_t hidden_dim, std::size_t output_dim);
  static Projection init(std::size_t hidden_dim, std::size_t output_dim, Rng& rng);
};

struct GruVars {
  ad::Var w_z, u_z, b_z;
  ad::Var w_r, u_r, b_r;
  ad::Var w_h, u_h, b_h;
};

struct ProjectionVars {
  ad::Var weight, bias;
};

GruVars bind(ad::Graph& g, const GruCell& cell, bool trainable);
ProjectionVars bind(ad::Graph& g, const Projection& proj, bool trainable);

/// x: B x In, h: B x H -> B x H.
ad::Var gru_step(const GruVars& cell, ad::Var x, ad::Var h);

/// inputs: B x (steps * In), step t occupying columns [t In, (t+1) In).
/// Starts from h_0 = 0 and returns the final hidden state h_T (B x H).
ad::Var encode(const GruVars& cell, ad::Var inputs, std::size_t steps);

/// Decoder: s_0 = context, o_0 = 0; s_t = GRU([o_{t-1}; context], s_{t-1});
/// o_t = s_t W + b. Returns o_1..o_T, each B x D.
std::vector<ad::Var> decode(const GruVars& cell, const ProjectionVars& proj, ad::Var context, std::size_t steps);

}  // namespace din::seq2seq
