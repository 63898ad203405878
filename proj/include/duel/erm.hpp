// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "duel/core/buffer.hpp"
#include "duel/core/errors.hpp"
#include "duel/core/mlp.hpp"
#include "duel/core/optim.hpp"
#include "duel/core/types.hpp"

namespace duel {

/// One ensemble member: trainable weights and the frozen copy of its initial
/// weights that the anchor penalty pulls toward.
class RewardHead {
 public:
  explicit RewardHead(Mlp weights) : weights_(weights), anchor_(std::move(weights)) {}
  RewardHead(Mlp weights, Mlp anchor);

  const Mlp& weights() const { return weights_; }
  Mlp& weights() { return weights_; }
  const Mlp& anchor() const { return anchor_; }

  double reward(std::span<const double> features) const { return weights_.forward(features); }
  /// ||weights - anchor||^2
  double anchor_distance_sq() const;

  bool operator==(const RewardHead&) const = default;

 private:
  Mlp weights_;
  Mlp anchor_;
};

struct ErmConfig {
  std::size_t num_heads = 20;                // K
  std::vector<std::size_t> hidden{16, 16};  // hidden widths of every head
  double lambda_reg = 0.5;                   // anchor coefficient
  double learning_rate = 1e-2;               // alpha_R (plain SGD)
  double init_scale = 1.0;                   // weight init std multiplier

  bool operator==(const ErmConfig&) const = default;
};

/// Anchored ensemble of reward heads approximating the reward posterior.
class EpistemicRewardModel {
 public:
  EpistemicRewardModel(std::size_t feature_dim, const ErmConfig& cfg, RngStream& rng);
  EpistemicRewardModel(std::vector<RewardHead> heads, double lambda_reg, double learning_rate);

  std::size_t num_heads() const { return heads_.size(); }
  const std::vector<RewardHead>& heads() const { return heads_; }
  std::vector<RewardHead>& heads() { return heads_; }
  const RewardHead& head(std::size_t k) const { return heads_.at(k); }
  double lambda_reg() const { return lambda_reg_; }
  double learning_rate() const { return learning_rate_; }
  std::size_t feature_dim() const { return heads_.front().weights().input_dim(); }

  /// rewards[k * n + i] = r_k(x, candidates[i])
  Vec reward_table(std::span<const ResponseRef> candidates) const;
  /// Ensemble-mean reward of one response.
  double mean_reward(const ResponseRef& y) const;
  /// Mean over heads of ||phi_k - phi_k^0||.
  double mean_anchor_distance() const;

  bool operator==(const EpistemicRewardModel&) const = default;

 private:
  std::vector<RewardHead> heads_;
  double lambda_reg_;
  double learning_rate_;
};

/// r_phi(x, y) for one head.
double head_reward(const RewardHead& h, const ContextVec& x, const ResponseRef& y);

/// Mean over the batch of -log sigmoid(r(x, y+) - r(x, y-)). Throws on empty batch.
double nll_loss(const RewardHead& h, std::span<const PreferenceTriplet> batch);
/// Gradient of nll_loss with respect to the head's flat parameters.
Vec nll_grad(const RewardHead& h, std::span<const PreferenceTriplet> batch);

/// sum_k [ nll_loss(head_k) + lambda * ||phi_k - phi_k^0||^2 ].
double erm_loss(const EpistemicRewardModel& m, std::span<const PreferenceTriplet> batch);
/// Gradient of head k's term of erm_loss.
Vec erm_head_grad(const EpistemicRewardModel& m, std::size_t k,
                  std::span<const PreferenceTriplet> batch);

/// m_batches SGD steps; each step draws an independent batch of b triplets per
/// head. Empty buffer: no-op returning SkippedEmpty.
UpdateStatus erm_update(EpistemicRewardModel& m, const ExperienceBuffer& buf, std::size_t m_batches,
                        std::size_t b, RngStream& rng);

/// Same sampling as above, stepping each head with its own optimizer state
/// (one entry per head) instead of constant-rate SGD.
UpdateStatus erm_update(EpistemicRewardModel& m, const ExperienceBuffer& buf, std::size_t m_batches,
                        std::size_t b, RngStream& rng, std::span<Optimizer> head_optimizers);

/// Posterior sampling: a uniformly random head index in [0, K).
std::size_t posterior_sample(const EpistemicRewardModel& m, RngStream& rng);

/// Population variance over heads of sigmoid(r_k(x, y) - r_k(x, b)).
double preference_variance(const EpistemicRewardModel& m, const ContextVec& x, const ResponseRef& y,
                           const ResponseRef& b);

}  // namespace duel
