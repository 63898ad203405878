// SPDX-License-Identifier: Apache-2.0
#include "duel/oracle.hpp"

#include <cmath>
#include <string>

#include "duel/core/errors.hpp"
#include "duel/core/math.hpp"
#include "duel/simd/kernels.hpp"

namespace duel {

std::string_view to_string(LabelMode m) {
  return m == LabelMode::Bernoulli ? "bernoulli" : "deterministic";
}

std::string_view to_string(RewardKind k) { return k == RewardKind::Linear ? "linear" : "mlp"; }

LabelMode parse_label_mode(std::string_view s) {
  if (s == "bernoulli") return LabelMode::Bernoulli;
  if (s == "deterministic") return LabelMode::Deterministic;
  throw InputError("unknown label mode '" + std::string(s) + "'");
}

RewardKind parse_reward_kind(std::string_view s) {
  if (s == "linear") return RewardKind::Linear;
  if (s == "mlp") return RewardKind::Mlp;
  throw InputError("unknown reward kind '" + std::string(s) + "'");
}

double pair_draw(std::uint64_t seed, std::size_t index) {
  return uniform_from_seed(seed ^ mix64(0xa0761d6478bd642fULL + index));
}

OracleSpec::OracleSpec(Reward reward, LabelMode mode, std::uint64_t seed)
    : reward_(std::move(reward)), mode_(mode), seed_(seed) {
  if (feature_dim() == 0) throw InputError("OracleSpec: empty reward model");
}

OracleSpec OracleSpec::from_seed(RewardKind kind, std::size_t feature_dim, std::uint64_t seed,
                                 LabelMode mode) {
  RngStream rng = RngStream(seed, "oracle").split(to_string(kind));
  if (kind == RewardKind::Linear) {
    Linear lin{Vec(feature_dim)};
    const double s = 2.0 / std::sqrt(static_cast<double>(feature_dim));
    for (auto& w : lin.weights) w = s * rng.normal();
    return OracleSpec(std::move(lin), mode, seed);
  }
  Mlp net(feature_dim, {16, 16});
  net.init_random(rng, 1.5, 0.1);
  return OracleSpec(std::move(net), mode, seed);
}

RewardKind OracleSpec::reward_kind() const {
  return std::holds_alternative<Linear>(reward_) ? RewardKind::Linear : RewardKind::Mlp;
}

std::size_t OracleSpec::feature_dim() const {
  if (const auto* lin = std::get_if<Linear>(&reward_)) return lin->weights.size();
  return std::get<Mlp>(reward_).input_dim();
}

void OracleSpec::check_features(std::span<const double> f) const {
  if (f.size() != feature_dim()) {
    throw InputError("oracle: feature dimension " + std::to_string(f.size()) + ", expected " +
                     std::to_string(feature_dim()));
  }
}

double OracleSpec::reward_features(std::span<const double> features) const {
  check_features(features);
  if (const auto* lin = std::get_if<Linear>(&reward_)) return simd::dot(lin->weights, features);
  return std::get<Mlp>(reward_).forward(features);
}

double OracleSpec::reward(const ContextVec&, const ResponseRef& y) const {
  return reward_features(y.features);
}

double OracleSpec::preference_prob(const ContextVec& x, const ResponseRef& y,
                                   const ResponseRef& yp) const {
  if (y.action_id == yp.action_id) throw InputError("preference_prob: responses must differ");
  return sigmoid(reward(x, y) - reward(x, yp));
}

bool OracleSpec::first_wins(std::span<const double> f_first, std::span<const double> f_second,
                            LabelMode mode, std::uint64_t seed, std::size_t index,
                            double* prob_out) const {
  const double r1 = reward_features(f_first);
  const double r2 = reward_features(f_second);
  const double prob = sigmoid(r1 - r2);
  if (prob_out) *prob_out = prob;
  if (mode == LabelMode::Deterministic) return r1 >= r2;
  return pair_draw(seed, index) < prob;
}

PreferenceTriplet OracleSpec::label_pair(const ContextVec& x, const ResponseRef& y,
                                         const ResponseRef& yp, RngStream& rng,
                                         std::int64_t round) const {
  return label_pair_seeded(x, y, yp, rng.next_u64(), round);
}

PreferenceTriplet OracleSpec::label_pair_seeded(const ContextVec& x, const ResponseRef& y,
                                                const ResponseRef& yp, std::uint64_t pair_seed,
                                                std::int64_t round) const {
  if (y.action_id == yp.action_id) throw InputError("label_pair: responses must differ");
  const ResponseRef& lo = y.action_id < yp.action_id ? y : yp;
  const ResponseRef& hi = y.action_id < yp.action_id ? yp : y;
  const bool lo_wins = first_wins(lo.features, hi.features, mode_, pair_seed, 0, nullptr);
  PreferenceTriplet t;
  t.context = x;
  t.winner = lo_wins ? lo : hi;
  t.loser = lo_wins ? hi : lo;
  t.source = LabelSource::OracleLabel;
  t.round = round;
  return t;
}

Judgement OracleSpec::judge_win(const ContextVec& x, const ResponseRef& y_agent,
                                const ResponseRef& y_ref) const {
  if (y_agent.action_id == y_ref.action_id && y_agent.features == y_ref.features) return Judgement::Tie;
  const double diff = reward(x, y_agent) - reward(x, y_ref);
  if (diff > kJudgeTieEpsilon) return Judgement::Win;
  if (diff < -kJudgeTieEpsilon) return Judgement::Loss;
  return Judgement::Tie;
}

int OracleSpec::best_action(const ContextFeatures& cf) const {
  int best = 0;
  double best_r = reward_features(cf.row(0));
  for (std::size_t a = 1; a < cf.num_actions; ++a) {
    const double r = reward_features(cf.row(static_cast<int>(a)));
    if (r > best_r) {
      best_r = r;
      best = static_cast<int>(a);
    }
  }
  return best;
}

PreferenceTriplet InprocOracle::label_pair(const ContextVec& x, const ResponseRef& y,
                                           const ResponseRef& yp, RngStream& rng,
                                           std::int64_t round) {
  auto t = spec_.label_pair(x, y, yp, rng, round);
  ++queries_;
  return t;
}

}  // namespace duel
