// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "duel/agent.hpp"
#include "duel/core/feature_map.hpp"
#include "duel/oracle.hpp"
#include "duel/policy.hpp"

namespace duel {

/// Win = 1, Tie = 0.5, Loss = 0.
double judgement_score(Judgement j);

/// r*(x, y*) - (r*(x, y) + r*(x, y')) / 2 with y* the exact argmax over the universe.
double immediate_regret(const OracleSpec& oracle, const ContextFeatures& cf, const ResponseRef& y,
                        const ResponseRef& yp);

/// Mean judgement score over the judged responses. Throws InputError when empty.
double online_win_rate(std::span<const Judgement> judgements);
/// Rejudges both duel responses of every record against its reference action.
double online_win_rate(std::span<const DuelRecord> records, const OracleSpec& oracle, const FeatureMap& fm);

/// Fixed holdout contexts, each with one reference response drawn from the
/// reference policy.
struct EvalSuite {
  std::vector<ContextFeatures> holdout;
  std::vector<int> references;
  std::size_t eval_period = 32;

  static EvalSuite build(const FeatureMap& fm, const SoftmaxPolicy& reference, std::size_t num_contexts,
                         std::uint64_t seed, std::size_t eval_period);
};

/// Greedy response vs reference on every holdout context, mean judgement score.
double offline_win_rate(const SoftmaxPolicy& pol, const EvalSuite& suite, const OracleSpec& oracle);

/// Per-context action distributions; table[c][a] = pi(a | context c).
using PolicyTable = std::vector<Vec>;

PolicyTable tabulate(const SoftmaxPolicy& pol, std::span<const ContextFeatures> contexts);
PolicyTable deterministic_table(std::span<const int> actions, std::size_t num_actions);

struct TotalPreferenceMode {
  enum Kind { Exact, MonteCarlo } kind = Exact;
  std::size_t samples = 0;
};

inline constexpr std::size_t kExactActionLimit = 1024;

/// E_x E_{a~pi} E_{a'~mu} P(a > a' | x) over a uniform distribution on
/// `contexts`. Exact mode enumerates the product distribution and refuses
/// universes above kExactActionLimit; MonteCarlo averages P over sampled triples.
double total_preference(const PolicyTable& pi, const PolicyTable& mu, std::span<const ContextFeatures> contexts,
                        const OracleSpec& oracle, TotalPreferenceMode mode = {}, RngStream* rng = nullptr);

struct VonNeumannReport {
  std::vector<int> greedy_actions;       // argmax r* per context
  double objective = 0.0;                // J(pi*) = mean_x max_y r*(x, y)
  double min_total_preference = 1.0;     // min over checked pi' of P(pi* > pi')
  double max_reverse_preference = 0.0;   // max over checked pi' of P(pi' > pi*)
  double max_competitor_objective = 0.0; // max over checked pi' of J(pi')
  std::uint64_t policies_checked = 0;
  bool enumerated = false;               // every deterministic policy visited
  bool passed = false;
};

inline constexpr std::size_t kVonNeumannMaxActions = 16;
inline constexpr std::size_t kVonNeumannMaxContexts = 8;

/// Checks that the r*-greedy policy beats or ties every deterministic policy in
/// total preference. Policies are enumerated outright when there are at most
/// 2^22 of them; larger instances use the per-context decomposition of the
/// minimum, which is exact because total preference averages over contexts.
/// Throws InputError beyond 16 actions or 8 contexts.
VonNeumannReport von_neumann_check(const OracleSpec& oracle, std::span<const ContextFeatures> contexts);

struct EvalPoint {
  std::int64_t round = 0;
  std::uint64_t oracle_queries = 0;
  double offline_win_rate = 0.0;
};

/// Oracle-query count at the first evaluation whose win rate reaches the
/// threshold; nullopt when never reached.
std::optional<std::uint64_t> queries_to_threshold(std::span<const EvalPoint> evals, double threshold);

}  // namespace duel
