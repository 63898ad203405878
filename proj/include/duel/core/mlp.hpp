// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "duel/core/rng.hpp"
#include "duel/core/types.hpp"

namespace duel {

/// Scalar-output tanh MLP with a flat parameter vector.
///
/// Layout per layer l (in -> out): W_l [out x in] row-major, then b_l [out].
/// Hidden layers apply tanh; the final layer (out = 1) is linear. An empty
/// hidden list gives a linear model w . x + b.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t input_dim, std::vector<std::size_t> hidden);

  /// Weights ~ N(0, scale^2 / fan_in), biases ~ N(0, bias_scale^2).
  void init_random(RngStream& rng, double scale = 1.0, double bias_scale = 0.1);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Throws InputError on an input length mismatch.
  double forward(std::span<const double> x) const;

  /// Returns f(x) and accumulates scale * df/dparams into grad.
  double backward(std::span<const double> x, double scale, std::span<double> grad) const;

  bool operator==(const Mlp& o) const {
    return input_dim_ == o.input_dim_ && hidden_ == o.hidden_ && params_ == o.params_;
  }

 private:
  struct Layer {
    std::size_t in, out, w_off, b_off;
  };
  void check_input(std::span<const double> x) const;

  std::size_t input_dim_ = 0;
  std::vector<std::size_t> hidden_;
  std::vector<Layer> layers_;
  Vec params_;
};

}  // namespace duel
