// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <variant>

#include "duel/core/errors.hpp"
#include "duel/core/mlp.hpp"
#include "duel/core/rng.hpp"
#include "duel/core/types.hpp"

namespace duel {

enum class LabelMode { Bernoulli, Deterministic };
enum class RewardKind { Linear, Mlp };
enum class Judgement { Loss = -1, Tie = 0, Win = 1 };

std::string_view to_string(LabelMode m);
std::string_view to_string(RewardKind k);
LabelMode parse_label_mode(std::string_view s);
RewardKind parse_reward_kind(std::string_view s);

inline constexpr double kJudgeTieEpsilon = 1e-9;

/// Uniform draw for pair `index` of a labeling request carrying `seed`. Both the
/// in-process oracle and the oracle service use it, so Bernoulli labels do not
/// depend on where or how requests are batched.
double pair_draw(std::uint64_t seed, std::size_t index);

/// Ground-truth implicit reward r*(x, y) over joint features, plus the
/// labeling rule for duels.
class OracleSpec {
 public:
  struct Linear {
    Vec weights;
  };
  using Reward = std::variant<Linear, Mlp>;

  OracleSpec(Reward reward, LabelMode mode, std::uint64_t seed = 0);

  /// Linear weights ~ N(0, 4/p), or a p -> 16 -> 16 -> 1 tanh net, drawn from seed.
  static OracleSpec from_seed(RewardKind kind, std::size_t feature_dim, std::uint64_t seed,
                              LabelMode mode);

  RewardKind reward_kind() const;
  LabelMode label_mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t feature_dim() const;
  const Reward& reward_model() const { return reward_; }

  /// r* evaluated on raw joint features.
  double reward_features(std::span<const double> features) const;
  double reward(const ContextVec& x, const ResponseRef& y) const;

  /// P(y > y' | x) = sigmoid(r*(x,y) - r*(x,y')). Throws InputError if y == y'.
  double preference_prob(const ContextVec& x, const ResponseRef& y, const ResponseRef& yp) const;

  /// Core labeling rule on features: returns true when the first response wins.
  /// Deterministic: first wins iff r*(first) >= r*(second). Bernoulli: first wins
  /// iff pair_draw(seed, index) < P(first > second).
  bool first_wins(std::span<const double> f_first, std::span<const double> f_second,
                  LabelMode mode, std::uint64_t seed, std::size_t index, double* prob_out) const;

  /// Labels a duel. The pair is put in ascending action_id order before the
  /// rule is applied, so exact ties go to the lower action id.
  PreferenceTriplet label_pair(const ContextVec& x, const ResponseRef& y, const ResponseRef& yp,
                               RngStream& rng, std::int64_t round = 0) const;
  PreferenceTriplet label_pair_seeded(const ContextVec& x, const ResponseRef& y, const ResponseRef& yp,
                                      std::uint64_t pair_seed, std::int64_t round = 0) const;

  /// Win/Tie/Loss of y_agent against y_ref with tie band kJudgeTieEpsilon.
  Judgement judge_win(const ContextVec& x, const ResponseRef& y_agent, const ResponseRef& y_ref) const;

  /// Exact argmax of r* over the universe (ties -> lower action id).
  int best_action(const ContextFeatures& cf) const;

 private:
  void check_features(std::span<const double> f) const;

  Reward reward_;
  LabelMode mode_;
  std::uint64_t seed_;
};

/// Where duel labels come from: the in-process oracle or the oracle service.
class LabelingEndpoint {
 public:
  virtual ~LabelingEndpoint() = default;
  virtual PreferenceTriplet label_pair(const ContextVec& x, const ResponseRef& y,
                                       const ResponseRef& yp, RngStream& rng, std::int64_t round) = 0;
  std::uint64_t queries() const { return queries_; }

 protected:
  std::uint64_t queries_ = 0;
};

class InprocOracle final : public LabelingEndpoint {
 public:
  explicit InprocOracle(const OracleSpec& spec) : spec_(spec) {}
  PreferenceTriplet label_pair(const ContextVec& x, const ResponseRef& y, const ResponseRef& yp,
                               RngStream& rng, std::int64_t round) override;

 private:
  const OracleSpec& spec_;
};

}  // namespace duel
