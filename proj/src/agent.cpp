// SPDX-License-Identifier: Apache-2.0
#include "duel/agent.hpp"

#include <algorithm>
#include <limits>

#include "duel/core/math.hpp"

namespace duel {

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::PassivePair: return "passive";
    case StrategyKind::EETS: return "ee-ts";
    case StrategyKind::BAITS: return "bai-ts";
    case StrategyKind::UncertaintyPair: return "uncertainty";
  }
  return "?";
}

namespace {

// Index of the best score; ties go to the lower action id.
std::size_t argmax_by_id(std::span<const double> scores, std::span<const ResponseRef> items,
                         int exclude_id = -1) {
  std::size_t best = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].action_id == exclude_id) continue;
    if (best == items.size() || scores[i] > scores[best] ||
        (scores[i] == scores[best] && items[i].action_id < items[best].action_id)) {
      best = i;
    }
  }
  return best;
}

Vec head_scores(const RewardHead& h, std::span<const ResponseRef> items) {
  Vec s(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) s[i] = h.reward(items[i].features);
  return s;
}

}  // namespace

ResponseRef best_distinct_action(const RewardHead& h, const ContextFeatures& cf, int exclude) {
  int best = -1;
  double best_r = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cf.num_actions; ++a) {
    if (static_cast<int>(a) == exclude) continue;
    const double r = h.reward(cf.row(static_cast<int>(a)));
    if (best < 0 || r > best_r) {
      best = static_cast<int>(a);
      best_r = r;
    }
  }
  if (best < 0) throw InputError("selection: universe has no second action");
  return cf.response(best);
}

ResponseRef select_first_ts(const EpistemicRewardModel& erm, std::span<const ResponseRef> candidates,
                            RngStream& rng) {
  if (candidates.empty()) throw InputError("select_first_ts: empty proposal set");
  const RewardHead& h = erm.head(posterior_sample(erm, rng));
  const Vec s = head_scores(h, candidates);
  return candidates[argmax_by_id(s, candidates)];
}

SecondChoice select_second_ee(const EpistemicRewardModel& erm, const ContextFeatures& cf,
                              std::span<const ResponseRef> candidates, const ResponseRef& y_first,
                              RngStream& rng, std::size_t retry_cap) {
  if (candidates.empty()) throw InputError("select_second_ee: empty proposal set");
  const std::size_t tries = std::max<std::size_t>(retry_cap, 1);
  const RewardHead* last = nullptr;
  Vec s;
  for (std::size_t i = 0; i < tries; ++i) {
    last = &erm.head(posterior_sample(erm, rng));
    s = head_scores(*last, candidates);
    const std::size_t pick = argmax_by_id(s, candidates);
    if (candidates[pick].action_id != y_first.action_id) return {candidates[pick], false};
  }
  const std::size_t runner_up = argmax_by_id(s, candidates, y_first.action_id);
  if (runner_up < candidates.size()) return {candidates[runner_up], true};
  return {best_distinct_action(*last, cf, y_first.action_id), true};
}

SecondChoice select_second_bai(const EpistemicRewardModel& erm, const ContextFeatures& cf,
                               std::span<const ResponseRef> candidates, const ResponseRef& y_first,
                               RngStream& rng) {
  if (candidates.empty()) throw InputError("select_second_bai: empty proposal set");
  Vec var(candidates.size(), 0.0);
  bool any = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].action_id == y_first.action_id) continue;
    var[i] = preference_variance(erm, cf.context, y_first, candidates[i]);
    any = true;
  }
  if (!any) {
    const RewardHead& h = erm.head(posterior_sample(erm, rng));
    return {best_distinct_action(h, cf, y_first.action_id), true};
  }
  return {candidates[argmax_by_id(var, candidates, y_first.action_id)], false};
}

std::pair<ResponseRef, ResponseRef> select_pair_uncertainty(const EpistemicRewardModel& erm,
                                                            std::span<const ResponseRef> candidates) {
  if (candidates.size() < 2) throw InputError("select_pair_uncertainty: need at least two candidates");
  const std::size_t n = candidates.size(), K = erm.num_heads();
  const Vec table = erm.reward_table(candidates);
  Vec diffs(K);
  double best_var = -1.0;
  std::pair<int, int> best_ids{0, 0};
  std::pair<std::size_t, std::size_t> best_idx{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < K; ++k) diffs[k] = table[k * n + i] - table[k * n + j];
      const double v = population_moments(diffs).variance;
      const int lo = std::min(candidates[i].action_id, candidates[j].action_id);
      const int hi = std::max(candidates[i].action_id, candidates[j].action_id);
      const std::pair<int, int> ids{lo, hi};
      if (v > best_var || (v == best_var && ids < best_ids)) {
        best_var = v;
        best_ids = ids;
        best_idx = candidates[i].action_id == lo ? std::pair{i, j} : std::pair{j, i};
      }
    }
  }
  return {candidates[best_idx.first], candidates[best_idx.second]};
}

std::pair<ResponseRef, ResponseRef> select_pair_passive(const SoftmaxPolicy& pol, const ContextFeatures& cf,
                                                        RngStream& rng, bool* fallback) {
  if (cf.num_actions < 2) throw InputError("select_pair_passive: universe needs two actions");
  const int a = sample_action(pol, cf, rng);
  if (fallback) *fallback = false;
  for (int i = 0; i < 100; ++i) {
    const int b = sample_action(pol, cf, rng);
    if (b != a) return {cf.response(a), cf.response(b)};
  }
  const Vec z = logits(pol, cf);
  int best = -1;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (static_cast<int>(i) == a) continue;
    if (best < 0 || z[i] > z[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  if (fallback) *fallback = true;
  return {cf.response(a), cf.response(best)};
}

PreferenceTriplet mixed_label(double g, double gamma, LabelingEndpoint& oracle,
                              const EpistemicRewardModel* erm, const ContextVec& x, const ResponseRef& y,
                              const ResponseRef& yp, RngStream& rng, ExperienceBuffer& buffer,
                              std::int64_t round) {
  if (y.action_id == yp.action_id) throw InputError("mixed_label: responses must differ");
  if (g < gamma || erm == nullptr) {
    PreferenceTriplet t = oracle.label_pair(x, y, yp, rng, round);
    buffer.append(t);
    return t;
  }
  const RewardHead& h = erm->head(posterior_sample(*erm, rng));
  const double ry = h.reward(y.features), ryp = h.reward(yp.features);
  const bool y_wins = ry > ryp || (ry == ryp && y.action_id < yp.action_id);
  PreferenceTriplet t;
  t.context = x;
  t.winner = y_wins ? y : yp;
  t.loser = y_wins ? yp : y;
  t.source = LabelSource::SyntheticLabel;
  t.round = round;
  return t;
}

ResponseRef best_of_n(const SoftmaxPolicy& pol, const EpistemicRewardModel& erm, const ContextFeatures& cf,
                      std::size_t N, RngStream& rng) {
  if (N == 0) throw InputError("best_of_n: N must be >= 1");
  std::vector<ResponseRef> samples;
  samples.reserve(N);
  for (std::size_t i = 0; i < N; ++i) samples.push_back(cf.response(sample_action(pol, cf, rng)));
  Vec means(N);
  for (std::size_t i = 0; i < N; ++i) means[i] = erm.mean_reward(samples[i]);
  return samples[argmax_by_id(means, samples)];
}

SeaAgent::SeaAgent(const FeatureMap& fm, AgentConfig cfg, LabelingEndpoint& oracle, const RngStream& root)
    : fm_(fm),
      cfg_(std::move(cfg)),
      oracle_(oracle),
      policy_opt_(OptimizerConfig{cfg_.update_rule, cfg_.policy_lr, cfg_.lr_schedule,
                                  cfg_.schedule_horizon / std::max<std::size_t>(cfg_.policy_batch, 1)},
                  fm.feature_dim()),
      proposal_rng_(root.split("proposals")),
      select_rng_(root.split("selection")),
      gamma_rng_(root.split("gamma")),
      label_rng_(root.split("labels")),
      erm_rng_(root.split("erm")) {
  if (cfg_.gamma < 0.0 || cfg_.gamma > 1.0) throw InputError("AgentConfig: gamma must be in [0, 1]");
  if (cfg_.num_candidates < 2) throw InputError("AgentConfig: M must be >= 2");
  if (cfg_.policy_batch == 0) throw InputError("AgentConfig: policy batch must be >= 1");
  if (cfg_.reference_theta.empty()) {
    policy_.theta.assign(fm.feature_dim(), 0.0);
  } else if (cfg_.reference_theta.size() == fm.feature_dim()) {
    policy_.theta = cfg_.reference_theta;
  } else {
    throw InputError("AgentConfig: reference theta has the wrong dimension");
  }
  policy_.eta = cfg_.eta;
  ref_.policy = policy_;
  if (cfg_.strategy.kind != StrategyKind::PassivePair) {
    RngStream init = root.split("erm-init");
    erm_.emplace(fm.feature_dim(), cfg_.erm, init);
    const OptimizerConfig head_cfg{cfg_.update_rule, cfg_.erm.learning_rate, cfg_.lr_schedule,
                                   cfg_.schedule_horizon * cfg_.m_batches};
    head_opts_.assign(erm_->num_heads(), Optimizer(head_cfg, erm_->heads().front().weights().num_params()));
  }
}

double SeaAgent::current_gamma() const {
  if (!erm_) return 1.0;
  return oracle_labels_ < cfg_.gamma_burn_in ? 1.0 : cfg_.gamma;
}

DuelRecord SeaAgent::step(const ContextVec& x) {
  ++round_;
  const ContextFeatures cf = fm_.apply_all(x);
  DuelRecord rec;
  rec.round = round_;
  rec.context = x;

  ResponseRef y, yp;
  if (!erm_) {
    auto pair = select_pair_passive(policy_, cf, proposal_rng_, &rec.fallback);
    y = std::move(pair.first);
    yp = std::move(pair.second);
    rec.proposal_set_size = 2;
  } else {
    const auto candidates = sample_candidates(policy_, cf, cfg_.num_candidates, proposal_rng_);
    rec.proposal_set_size = candidates.size();
    switch (cfg_.strategy.kind) {
      case StrategyKind::EETS: {
        y = select_first_ts(*erm_, candidates, select_rng_);
        auto second = select_second_ee(*erm_, cf, candidates, y, select_rng_, cfg_.strategy.retry_cap);
        yp = std::move(second.response);
        rec.fallback = second.fallback;
        break;
      }
      case StrategyKind::BAITS: {
        y = select_first_ts(*erm_, candidates, select_rng_);
        auto second = select_second_bai(*erm_, cf, candidates, y, select_rng_);
        yp = std::move(second.response);
        rec.fallback = second.fallback;
        break;
      }
      case StrategyKind::UncertaintyPair: {
        if (candidates.size() >= 2) {
          auto pair = select_pair_uncertainty(*erm_, candidates);
          y = std::move(pair.first);
          yp = std::move(pair.second);
        } else {
          y = candidates.front();
          const RewardHead& h = erm_->head(posterior_sample(*erm_, select_rng_));
          yp = best_distinct_action(h, cf, y.action_id);
          rec.fallback = true;
        }
        break;
      }
      case StrategyKind::PassivePair: break;
    }
    rec.pair_variance = preference_variance(*erm_, x, y, yp);
  }
  rec.first = y.action_id;
  rec.second = yp.action_id;

  // One gamma draw per round keeps the streams aligned across gamma settings.
  const double g = gamma_rng_.uniform();
  const double gamma = current_gamma();
  PreferenceTriplet t = mixed_label(g, gamma, oracle_, erm_ ? &*erm_ : nullptr, x, y, yp, label_rng_,
                                    buffer_, round_);
  if (t.source == LabelSource::OracleLabel) ++oracle_labels_;
  rec.winner = t.winner.action_id;
  rec.loser = t.loser.action_id;
  rec.source = t.source;
  rec.oracle_queries = oracle_labels_;

  if (erm_) erm_update(*erm_, buffer_, cfg_.m_batches, cfg_.erm_batch, erm_rng_, head_opts_);

  pending_.push_back(std::move(t));
  if (pending_.size() >= cfg_.policy_batch) {
    policy_opt_.step(policy_.theta, dap_grad(cfg_.dap, policy_, ref_, pending_));
    pending_.clear();
  }
  return rec;
}

OfflineDataset collect_offline_dataset(const FeatureMap& fm, const ReferencePolicy& ref,
                                       LabelingEndpoint& oracle, std::size_t Q, RngStream& context_rng,
                                       RngStream& rng) {
  OfflineDataset ds;
  ds.triplets.reserve(Q);
  for (std::size_t i = 0; i < Q; ++i) {
    const ContextVec x = fm.sample_context(context_rng);
    const ContextFeatures cf = fm.apply_all(x);
    auto [y, yp] = select_pair_passive(ref.policy, cf, rng);
    ds.triplets.push_back(oracle.label_pair(x, y, yp, rng, static_cast<std::int64_t>(i + 1)));
  }
  return ds;
}

}  // namespace duel
