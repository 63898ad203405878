// SPDX-License-Identifier: Apache-2.0
#include "duel/erm.hpp"

#include <cmath>

#include "duel/core/math.hpp"
#include "duel/simd/kernels.hpp"

namespace duel {

RewardHead::RewardHead(Mlp weights, Mlp anchor) : weights_(std::move(weights)), anchor_(std::move(anchor)) {
  if (weights_.num_params() != anchor_.num_params() || weights_.hidden() != anchor_.hidden()) {
    throw InputError("RewardHead: weights and anchor must share an architecture");
  }
}

double RewardHead::anchor_distance_sq() const {
  auto w = weights_.params();
  auto a = anchor_.params();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - a[i]) * (w[i] - a[i]);
  return s;
}

EpistemicRewardModel::EpistemicRewardModel(std::size_t feature_dim, const ErmConfig& cfg, RngStream& rng)
    : lambda_reg_(cfg.lambda_reg), learning_rate_(cfg.learning_rate) {
  if (cfg.num_heads == 0) throw InputError("EpistemicRewardModel: need at least one head");
  if (cfg.lambda_reg < 0.0) throw InputError("EpistemicRewardModel: lambda must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw InputError("EpistemicRewardModel: learning rate must be > 0");
  heads_.reserve(cfg.num_heads);
  for (std::size_t k = 0; k < cfg.num_heads; ++k) {
    RngStream head_rng = rng.split("head/" + std::to_string(k));
    Mlp net(feature_dim, cfg.hidden);
    net.init_random(head_rng, cfg.init_scale, 0.1 * cfg.init_scale);
    heads_.emplace_back(std::move(net));
  }
}

EpistemicRewardModel::EpistemicRewardModel(std::vector<RewardHead> heads, double lambda_reg,
                                           double learning_rate)
    : heads_(std::move(heads)), lambda_reg_(lambda_reg), learning_rate_(learning_rate) {
  if (heads_.empty()) throw InputError("EpistemicRewardModel: need at least one head");
  for (const auto& h : heads_) {
    if (h.weights().num_params() != heads_.front().weights().num_params()) {
      throw InputError("EpistemicRewardModel: heads must share an architecture");
    }
  }
}

Vec EpistemicRewardModel::reward_table(std::span<const ResponseRef> candidates) const {
  const std::size_t n = candidates.size();
  Vec out(heads_.size() * n);
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) out[k * n + i] = heads_[k].reward(candidates[i].features);
  }
  return out;
}

double EpistemicRewardModel::mean_reward(const ResponseRef& y) const {
  double s = 0.0;
  for (const auto& h : heads_) s += h.reward(y.features);
  return s / static_cast<double>(heads_.size());
}

double EpistemicRewardModel::mean_anchor_distance() const {
  double s = 0.0;
  for (const auto& h : heads_) s += std::sqrt(h.anchor_distance_sq());
  return s / static_cast<double>(heads_.size());
}

double head_reward(const RewardHead& h, const ContextVec&, const ResponseRef& y) {
  return h.reward(y.features);
}

double nll_loss(const RewardHead& h, std::span<const PreferenceTriplet> batch) {
  if (batch.empty()) throw InputError("nll_loss: empty batch");
  double s = 0.0;
  for (const auto& t : batch) s += softplus(-(h.reward(t.winner.features) - h.reward(t.loser.features)));
  return s / static_cast<double>(batch.size());
}

Vec nll_grad(const RewardHead& h, std::span<const PreferenceTriplet> batch) {
  if (batch.empty()) throw InputError("nll_grad: empty batch");
  const Mlp& net = h.weights();
  Vec grad(net.num_params(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    const double margin = net.forward(t.winner.features) - net.forward(t.loser.features);
    // d/dmargin of -log sigmoid(margin) = -sigmoid(-margin)
    const double coeff = -sigmoid(-margin) * inv_n;
    net.backward(t.winner.features, coeff, grad);
    net.backward(t.loser.features, -coeff, grad);
  }
  return grad;
}

double erm_loss(const EpistemicRewardModel& m, std::span<const PreferenceTriplet> batch) {
  if (batch.empty()) throw InputError("erm_loss: empty batch");
  double s = 0.0;
  for (const auto& h : m.heads()) s += nll_loss(h, batch) + m.lambda_reg() * h.anchor_distance_sq();
  return s;
}

Vec erm_head_grad(const EpistemicRewardModel& m, std::size_t k, std::span<const PreferenceTriplet> batch) {
  const RewardHead& h = m.head(k);
  Vec grad = nll_grad(h, batch);
  if (m.lambda_reg() > 0.0) {
    auto w = h.weights().params();
    auto a = h.anchor().params();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += 2.0 * m.lambda_reg() * (w[i] - a[i]);
  }
  return grad;
}

UpdateStatus erm_update(EpistemicRewardModel& m, const ExperienceBuffer& buf, std::size_t m_batches,
                        std::size_t b, RngStream& rng) {
  if (buf.empty()) return UpdateStatus::SkippedEmpty;
  for (std::size_t step = 0; step < m_batches; ++step) {
    for (std::size_t k = 0; k < m.num_heads(); ++k) {
      const auto batch = buf.sample_batch(b, rng);
      const Vec grad = erm_head_grad(m, k, batch);
      simd::axpy(-m.learning_rate(), grad, m.heads()[k].weights().params());
    }
  }
  return UpdateStatus::Ok;
}

UpdateStatus erm_update(EpistemicRewardModel& m, const ExperienceBuffer& buf, std::size_t m_batches,
                        std::size_t b, RngStream& rng, std::span<Optimizer> head_optimizers) {
  if (head_optimizers.size() != m.num_heads()) throw InputError("erm_update: one optimizer per head");
  if (buf.empty()) return UpdateStatus::SkippedEmpty;
  for (std::size_t step = 0; step < m_batches; ++step) {
    for (std::size_t k = 0; k < m.num_heads(); ++k) {
      const auto batch = buf.sample_batch(b, rng);
      const Vec grad = erm_head_grad(m, k, batch);
      head_optimizers[k].step(m.heads()[k].weights().params(), grad);
    }
  }
  return UpdateStatus::Ok;
}

std::size_t posterior_sample(const EpistemicRewardModel& m, RngStream& rng) {
  return static_cast<std::size_t>(rng.uniform_index(m.num_heads()));
}

double preference_variance(const EpistemicRewardModel& m, const ContextVec&, const ResponseRef& y,
                           const ResponseRef& b) {
  Vec probs;
  probs.reserve(m.num_heads());
  for (const auto& h : m.heads()) probs.push_back(sigmoid(h.reward(y.features) - h.reward(b.features)));
  return population_moments(probs).variance;
}

}  // namespace duel
