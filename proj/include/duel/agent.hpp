// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "duel/core/buffer.hpp"
#include "duel/core/feature_map.hpp"
#include "duel/erm.hpp"
#include "duel/oracle.hpp"
#include "duel/policy.hpp"

namespace duel {

enum class StrategyKind { PassivePair, EETS, BAITS, UncertaintyPair };

std::string_view to_string(StrategyKind k);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::BAITS;
  std::size_t retry_cap = 40;  // E&E only; default 2K
};

struct AgentConfig {
  SelectionStrategy strategy;
  double gamma = 0.7;               // oracle share of policy-training duels after burn-in
  std::size_t gamma_burn_in = 1000; // oracle labels collected with gamma = 1
  std::size_t num_candidates = 20;  // M
  std::size_t m_batches = 5;        // ERM steps per round
  std::size_t erm_batch = 1;        // triplets per ERM step and head
  std::size_t policy_batch = 1;     // b: duels per policy step
  DapLossKind dap{DapKind::DPO, 0.1};
  double policy_lr = 5e-2;          // alpha_pi
  double eta = 0.7;                 // sampling temperature
  ErmConfig erm;
  UpdateRule update_rule = UpdateRule::Sgd;
  LrSchedule lr_schedule = LrSchedule::Constant;
  std::uint64_t schedule_horizon = 0;  // rounds covered by a cosine schedule
  Vec reference_theta;                 // pi_ref = pi_theta0; empty means uniform
};

/// One environment round as seen by the agent. Ground-truth metrics (regret,
/// judgements) are attached by the caller, which owns r*.
struct DuelRecord {
  std::int64_t round = 0;
  ContextVec context;
  int first = -1;
  int second = -1;
  int winner = -1;
  int loser = -1;
  LabelSource source = LabelSource::OracleLabel;
  std::size_t proposal_set_size = 0;
  double pair_variance = 0.0;
  bool fallback = false;
  std::uint64_t oracle_queries = 0;  // cumulative, after this round

  // Filled in by the evaluator.
  int reference = -1;
  Judgement judge_first = Judgement::Tie;
  Judgement judge_second = Judgement::Tie;
  double immediate_regret = 0.0;
  double cumulative_regret = 0.0;
  double online_win_rate = 0.0;
  std::optional<double> offline_win_rate;

  bool operator==(const DuelRecord&) const = default;
};

struct SecondChoice {
  ResponseRef response;
  bool fallback = false;
};

/// Highest-reward universe action under head h other than `exclude`
/// (ties -> lower id).
ResponseRef best_distinct_action(const RewardHead& h, const ContextFeatures& cf, int exclude);

/// Thompson step: draw a head, return its argmax over the proposal set
/// (ties -> lower action id). Throws InputError on an empty set.
ResponseRef select_first_ts(const EpistemicRewardModel& erm, std::span<const ResponseRef> candidates,
                            RngStream& rng);

/// E&E second response: redraw a head and take its argmax until it differs from
/// y_first, at most retry_cap draws. Exhaustion returns the runner-up under the
/// last head; a singleton proposal set returns the last head's best universe
/// action other than y_first (fallback flagged).
SecondChoice select_second_ee(const EpistemicRewardModel& erm, const ContextFeatures& cf,
                              std::span<const ResponseRef> candidates, const ResponseRef& y_first,
                              RngStream& rng, std::size_t retry_cap);

/// BAI second response: argmax over candidates other than y_first of
/// preference_variance(y_first, b). Singleton sets fall back as in E&E.
SecondChoice select_second_bai(const EpistemicRewardModel& erm, const ContextFeatures& cf,
                               std::span<const ResponseRef> candidates, const ResponseRef& y_first,
                               RngStream& rng);

/// Pure exploration: the unordered pair whose reward difference varies most
/// across heads; ties -> lexicographically smallest (lower id, higher id).
/// Throws InputError when fewer than two candidates.
std::pair<ResponseRef, ResponseRef> select_pair_uncertainty(const EpistemicRewardModel& erm,
                                                            std::span<const ResponseRef> candidates);

/// Two independent policy samples; the second is redrawn until distinct (100
/// tries), then replaced by the highest-logit action other than the first.
std::pair<ResponseRef, ResponseRef> select_pair_passive(const SoftmaxPolicy& pol, const ContextFeatures& cf,
                                                        RngStream& rng, bool* fallback = nullptr);

/// Gamma mixture labeling. g < gamma: the oracle labels the duel and the triplet
/// is appended to `buffer`. Otherwise one sampled head labels it (argmax of the
/// pair, ties -> lower id) and the buffer is untouched.
PreferenceTriplet mixed_label(double g, double gamma, LabelingEndpoint& oracle,
                              const EpistemicRewardModel* erm, const ContextVec& x, const ResponseRef& y,
                              const ResponseRef& yp, RngStream& rng, ExperienceBuffer& buffer,
                              std::int64_t round);

/// Best-of-N inference: N policy samples, return the highest ensemble-mean
/// reward (ties -> lower id).
ResponseRef best_of_n(const SoftmaxPolicy& pol, const EpistemicRewardModel& erm, const ContextFeatures& cf,
                      std::size_t N, RngStream& rng);

/// The online agent: SEA with a selectable duel strategy, or the passive
/// online DAP baseline when the strategy is PassivePair.
class SeaAgent {
 public:
  SeaAgent(const FeatureMap& fm, AgentConfig cfg, LabelingEndpoint& oracle, const RngStream& root);

  /// One round of the loop: propose, select, label, learn.
  DuelRecord step(const ContextVec& x);

  const AgentConfig& config() const { return cfg_; }
  const SoftmaxPolicy& policy() const { return policy_; }
  const ReferencePolicy& reference() const { return ref_; }
  const EpistemicRewardModel* erm() const { return erm_ ? &*erm_ : nullptr; }
  const ExperienceBuffer& buffer() const { return buffer_; }
  std::uint64_t oracle_labels() const { return oracle_labels_; }
  std::int64_t rounds() const { return round_; }
  /// Gamma in force for the next round.
  double current_gamma() const;

 private:
  const FeatureMap& fm_;
  AgentConfig cfg_;
  LabelingEndpoint& oracle_;
  SoftmaxPolicy policy_;
  ReferencePolicy ref_;
  std::optional<EpistemicRewardModel> erm_;
  Optimizer policy_opt_;
  std::vector<Optimizer> head_opts_;
  ExperienceBuffer buffer_;
  std::vector<PreferenceTriplet> pending_;
  RngStream proposal_rng_, select_rng_, gamma_rng_, label_rng_, erm_rng_;
  std::uint64_t oracle_labels_ = 0;
  std::int64_t round_ = 0;
};

/// A fixed preference dataset collected from the reference policy.
struct OfflineDataset {
  std::vector<PreferenceTriplet> triplets;
};

/// Q duels proposed by the reference policy on fresh contexts, all oracle-labeled.
OfflineDataset collect_offline_dataset(const FeatureMap& fm, const ReferencePolicy& ref,
                                       LabelingEndpoint& oracle, std::size_t Q, RngStream& context_rng,
                                       RngStream& rng);

}  // namespace duel
