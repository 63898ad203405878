// SPDX-License-Identifier: Apache-2.0
#include "duel/metrics.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "duel/core/errors.hpp"
#include "duel/core/math.hpp"

namespace duel {

double judgement_score(Judgement j) {
  switch (j) {
    case Judgement::Win: return 1.0;
    case Judgement::Tie: return 0.5;
    case Judgement::Loss: return 0.0;
  }
  return 0.5;
}

double immediate_regret(const OracleSpec& oracle, const ContextFeatures& cf, const ResponseRef& y,
                        const ResponseRef& yp) {
  const int best = oracle.best_action(cf);
  const double r_best = oracle.reward_features(cf.row(best));
  const double r = oracle.reward(cf.context, y) + oracle.reward(cf.context, yp);
  return std::max(0.0, r_best - 0.5 * r);
}

double online_win_rate(std::span<const Judgement> judgements) {
  if (judgements.empty()) throw InputError("online_win_rate: no judged responses");
  double s = 0.0;
  for (Judgement j : judgements) s += judgement_score(j);
  return s / static_cast<double>(judgements.size());
}

double online_win_rate(std::span<const DuelRecord> records, const OracleSpec& oracle, const FeatureMap& fm) {
  std::vector<Judgement> js;
  js.reserve(records.size() * 2);
  for (const auto& r : records) {
    const ContextFeatures cf = fm.apply_all(r.context);
    const ResponseRef ref = cf.response(r.reference);
    js.push_back(oracle.judge_win(r.context, cf.response(r.first), ref));
    js.push_back(oracle.judge_win(r.context, cf.response(r.second), ref));
  }
  return online_win_rate(js);
}

EvalSuite EvalSuite::build(const FeatureMap& fm, const SoftmaxPolicy& reference, std::size_t num_contexts,
                           std::uint64_t seed, std::size_t eval_period) {
  EvalSuite suite;
  suite.eval_period = eval_period;
  RngStream root(seed, "eval-suite");
  RngStream ctx_rng = root.split("holdout");
  RngStream ref_rng = root.split("references");
  suite.holdout.reserve(num_contexts);
  for (std::size_t i = 0; i < num_contexts; ++i) {
    suite.holdout.push_back(fm.apply_all(fm.sample_context(ctx_rng)));
    suite.references.push_back(sample_action(reference, suite.holdout.back(), ref_rng));
  }
  return suite;
}

double offline_win_rate(const SoftmaxPolicy& pol, const EvalSuite& suite, const OracleSpec& oracle) {
  if (suite.holdout.empty()) throw InputError("offline_win_rate: empty evaluation suite");
  double s = 0.0;
  for (std::size_t i = 0; i < suite.holdout.size(); ++i) {
    const ContextFeatures& cf = suite.holdout[i];
    const ResponseRef mine = greedy_response(pol, cf);
    s += judgement_score(oracle.judge_win(cf.context, mine, cf.response(suite.references[i])));
  }
  return s / static_cast<double>(suite.holdout.size());
}

PolicyTable tabulate(const SoftmaxPolicy& pol, std::span<const ContextFeatures> contexts) {
  PolicyTable t;
  t.reserve(contexts.size());
  for (const auto& cf : contexts) t.push_back(probabilities(pol, cf));
  return t;
}

PolicyTable deterministic_table(std::span<const int> actions, std::size_t num_actions) {
  PolicyTable t(actions.size(), Vec(num_actions, 0.0));
  for (std::size_t c = 0; c < actions.size(); ++c) t[c].at(static_cast<std::size_t>(actions[c])) = 1.0;
  return t;
}

namespace {

Vec context_rewards(const OracleSpec& oracle, const ContextFeatures& cf) {
  Vec r(cf.num_actions);
  for (std::size_t a = 0; a < cf.num_actions; ++a) r[a] = oracle.reward_features(cf.row(static_cast<int>(a)));
  return r;
}

std::size_t draw_from(const Vec& probs, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    cum += probs[a];
    if (u < cum) return a;
  }
  return probs.size() - 1;
}

}  // namespace

double total_preference(const PolicyTable& pi, const PolicyTable& mu, std::span<const ContextFeatures> contexts,
                        const OracleSpec& oracle, TotalPreferenceMode mode, RngStream* rng) {
  if (contexts.empty()) throw InputError("total_preference: no contexts");
  if (pi.size() != contexts.size() || mu.size() != contexts.size()) {
    throw InputError("total_preference: policy tables must cover every context");
  }
  if (mode.kind == TotalPreferenceMode::Exact) {
    double total = 0.0;
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      const std::size_t n = contexts[c].num_actions;
      if (n > kExactActionLimit) {
        throw InputError("total_preference: exact mode refuses " + std::to_string(n) + " actions (limit " +
                         std::to_string(kExactActionLimit) + ")");
      }
      const Vec r = context_rewards(oracle, contexts[c]);
      double s = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        if (pi[c][a] == 0.0) continue;
        double inner = 0.0;
        for (std::size_t b = 0; b < n; ++b) inner += mu[c][b] * sigmoid(r[a] - r[b]);
        s += pi[c][a] * inner;
      }
      total += s;
    }
    return total / static_cast<double>(contexts.size());
  }
  if (rng == nullptr || mode.samples == 0) {
    throw InputError("total_preference: Monte Carlo mode needs an rng and a positive sample count");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < mode.samples; ++i) {
    const std::size_t c = rng->uniform_index(contexts.size());
    const std::size_t a = draw_from(pi[c], *rng);
    const std::size_t b = draw_from(mu[c], *rng);
    const ContextFeatures& cf = contexts[c];
    s += sigmoid(oracle.reward_features(cf.row(static_cast<int>(a))) -
                 oracle.reward_features(cf.row(static_cast<int>(b))));
  }
  return s / static_cast<double>(mode.samples);
}

VonNeumannReport von_neumann_check(const OracleSpec& oracle, std::span<const ContextFeatures> contexts) {
  if (contexts.empty()) throw InputError("von_neumann_check: no contexts");
  if (contexts.size() > kVonNeumannMaxContexts) throw InputError("von_neumann_check: too many contexts");
  const std::size_t n = contexts.front().num_actions;
  if (n > kVonNeumannMaxActions) throw InputError("von_neumann_check: too many actions");
  const std::size_t C = contexts.size();

  VonNeumannReport rep;
  std::vector<Vec> rewards;
  // pref[c][a] = P(greedy_c > a | c); rev[c][a] = P(a > greedy_c | c)
  std::vector<Vec> pref(C, Vec(n)), rev(C, Vec(n));
  for (std::size_t c = 0; c < C; ++c) {
    rewards.push_back(context_rewards(oracle, contexts[c]));
    const Vec& r = rewards.back();
    const int g = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    rep.greedy_actions.push_back(g);
    rep.objective += r[static_cast<std::size_t>(g)];
    for (std::size_t a = 0; a < n; ++a) {
      pref[c][a] = sigmoid(r[static_cast<std::size_t>(g)] - r[a]);
      rev[c][a] = sigmoid(r[a] - r[static_cast<std::size_t>(g)]);
    }
  }
  const double inv_c = 1.0 / static_cast<double>(C);
  rep.objective *= inv_c;

  double count = 1.0;
  for (std::size_t c = 0; c < C; ++c) count *= static_cast<double>(n);
  rep.max_competitor_objective = -std::numeric_limits<double>::infinity();
  if (count <= static_cast<double>(1u << 22)) {
    rep.enumerated = true;
    std::vector<std::size_t> choice(C, 0);
    while (true) {
      double fwd = 0.0, back = 0.0, j = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        fwd += pref[c][choice[c]];
        back += rev[c][choice[c]];
        j += rewards[c][choice[c]];
      }
      rep.min_total_preference = std::min(rep.min_total_preference, fwd * inv_c);
      rep.max_reverse_preference = std::max(rep.max_reverse_preference, back * inv_c);
      rep.max_competitor_objective = std::max(rep.max_competitor_objective, j * inv_c);
      ++rep.policies_checked;
      std::size_t c = 0;
      while (c < C && ++choice[c] == n) choice[c++] = 0;
      if (c == C) break;
    }
  } else {
    double fwd = 0.0, back = 0.0, j = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      fwd += *std::min_element(pref[c].begin(), pref[c].end());
      back += *std::max_element(rev[c].begin(), rev[c].end());
      j += *std::max_element(rewards[c].begin(), rewards[c].end());
    }
    rep.min_total_preference = fwd * inv_c;
    rep.max_reverse_preference = back * inv_c;
    rep.max_competitor_objective = j * inv_c;
    rep.policies_checked = C * n;
  }
  rep.passed = rep.min_total_preference >= 0.5 && rep.max_reverse_preference <= 0.5 &&
               rep.max_competitor_objective <= rep.objective;
  return rep;
}

std::optional<std::uint64_t> queries_to_threshold(std::span<const EvalPoint> evals, double threshold) {
  for (const auto& e : evals) {
    if (e.offline_win_rate >= threshold) return e.oracle_queries;
  }
  return std::nullopt;
}

}  // namespace duel
