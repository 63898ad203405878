// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "duel/core/feature_map.hpp"
#include "duel/oracle.hpp"

using namespace duel;

namespace {

// Linear oracle over 2-dim features with w = (1, 0): r* is the first coordinate.
OracleSpec unit_oracle(LabelMode mode) { return OracleSpec(OracleSpec::Linear{{1.0, 0.0}}, mode, 5); }

ResponseRef resp(int id, double r) { return ResponseRef{id, {r, 0.3}}; }

const ContextVec kCtx{{0.0}};

}  // namespace

TEST_CASE("linear reward") {
  const OracleSpec zero(OracleSpec::Linear{Vec(4, 0.0)}, LabelMode::Deterministic);
  CHECK(zero.reward(kCtx, ResponseRef{0, {0.3, -2.0, 1.0, 5.0}}) == 0.0);

  const OracleSpec e1(OracleSpec::Linear{{1.0, 0.0, 0.0}}, LabelMode::Deterministic);
  CHECK(e1.reward(kCtx, ResponseRef{0, {0.3, 0.9, -0.4}}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(e1.reward(kCtx, ResponseRef{0, {0.3}}), InputError);
}

TEST_CASE("mlp reward is deterministic and seeded") {
  const auto a = OracleSpec::from_seed(RewardKind::Mlp, 32, 7, LabelMode::Deterministic);
  const auto b = OracleSpec::from_seed(RewardKind::Mlp, 32, 7, LabelMode::Deterministic);
  const auto c = OracleSpec::from_seed(RewardKind::Mlp, 32, 8, LabelMode::Deterministic);
  const FeatureMap fm({});
  RngStream r(1);
  const ContextVec x = fm.sample_context(r);
  const ResponseRef y{3, fm.apply(x, 3)};
  CHECK(a.reward(x, y) == a.reward(x, y));
  CHECK(a.reward(x, y) == b.reward(x, y));
  CHECK(a.reward(x, y) != c.reward(x, y));
  CHECK(a.reward_kind() == RewardKind::Mlp);
}

TEST_CASE("preference probability") {
  const OracleSpec o = unit_oracle(LabelMode::Deterministic);
  CHECK(o.preference_prob(kCtx, resp(0, 0.4), resp(1, 0.4)) == 0.5);
  CHECK(o.preference_prob(kCtx, resp(0, 1.5), resp(1, 0.5)) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  for (double d : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
    const double p = o.preference_prob(kCtx, resp(0, d), resp(1, 0.0));
    const double q = o.preference_prob(kCtx, resp(1, 0.0), resp(0, d));
    CHECK(p + q == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(o.preference_prob(kCtx, resp(2, 0.0), resp(2, 1.0)), InputError);
}

TEST_CASE("deterministic labels") {
  const OracleSpec o = unit_oracle(LabelMode::Deterministic);
  RngStream r(3);
  for (int i = 0; i < 50; ++i) {
    const auto t = o.label_pair(kCtx, resp(4, 0.2), resp(1, -0.1), r, i);
    CHECK(t.winner.action_id == 4);
    CHECK(t.loser.action_id == 1);
    CHECK(t.source == LabelSource::OracleLabel);
    CHECK(t.round == i);
  }
  // exact ties go to the lower action id whichever order the pair arrives in
  CHECK(o.label_pair(kCtx, resp(5, 0.2), resp(2, 0.2), r).winner.action_id == 2);
  CHECK(o.label_pair(kCtx, resp(2, 0.2), resp(5, 0.2), r).winner.action_id == 2);
  CHECK_THROWS_AS(o.label_pair(kCtx, resp(1, 0.0), resp(1, 0.5), r), InputError);
}

TEST_CASE("bernoulli labels follow the preference probability") {
  const OracleSpec o = unit_oracle(LabelMode::Bernoulli);
  RngStream r(11);
  int wins = 0;
  for (int i = 0; i < 10000; ++i) wins += o.label_pair(kCtx, resp(0, 0.0), resp(1, 0.0), r).winner.action_id == 0;
  CHECK(std::abs(wins / 10000.0 - 0.5) <= 0.02);

  wins = 0;
  for (int i = 0; i < 10000; ++i) wins += o.label_pair(kCtx, resp(0, 1.0), resp(1, 0.0), r).winner.action_id == 0;
  CHECK(std::abs(wins / 10000.0 - 0.7310585786300049) <= 0.02);
}

TEST_CASE("bernoulli labels replay from the same seed") {
  const OracleSpec o = unit_oracle(LabelMode::Bernoulli);
  RngStream a(21), b(21);
  for (int i = 0; i < 200; ++i) CHECK(o.label_pair(kCtx, resp(0, 0.1), resp(1, 0.0), a) ==
                                      o.label_pair(kCtx, resp(0, 0.1), resp(1, 0.0), b));
  // the seeded entry point is what the service calls
  CHECK(o.label_pair_seeded(kCtx, resp(0, 0.1), resp(1, 0.0), 99) ==
        o.label_pair_seeded(kCtx, resp(1, 0.0), resp(0, 0.1), 99));
}

TEST_CASE("pair draws are independent of batching") {
  // the draw depends only on (seed, index)
  CHECK(pair_draw(5, 0) == pair_draw(5, 0));
  CHECK(pair_draw(5, 0) != pair_draw(5, 1));
  double s = 0.0;
  for (std::size_t i = 0; i < 20000; ++i) s += pair_draw(17, i);
  CHECK(std::abs(s / 20000.0 - 0.5) < 0.01);
}

TEST_CASE("judging") {
  const OracleSpec o = unit_oracle(LabelMode::Deterministic);
  CHECK(o.judge_win(kCtx, resp(3, 0.2), resp(3, 0.2)) == Judgement::Tie);
  CHECK(o.judge_win(kCtx, resp(3, 0.7), resp(4, 0.2)) == Judgement::Win);
  CHECK(o.judge_win(kCtx, resp(4, 0.2), resp(3, 0.7)) == Judgement::Loss);
  CHECK(o.judge_win(kCtx, resp(3, 0.2 + 1e-12), resp(4, 0.2)) == Judgement::Tie);
  for (double d : {-1.0, -1e-6, 1e-6, 2.0}) {
    const auto fwd = o.judge_win(kCtx, resp(0, d), resp(1, 0.0));
    const auto back = o.judge_win(kCtx, resp(1, 0.0), resp(0, d));
    CHECK(static_cast<int>(fwd) == -static_cast<int>(back));
  }
}

TEST_CASE("induced preferences are transitive and the best response is unbeaten") {
  const FeatureMap fm({});
  for (RewardKind kind : {RewardKind::Linear, RewardKind::Mlp}) {
    const auto o = OracleSpec::from_seed(kind, 32, 4, LabelMode::Deterministic);
    RngStream r(6);
    for (int c = 0; c < 10; ++c) {
      const ContextVec x = fm.sample_context(r);
      const ContextFeatures cf = fm.apply_all(x);
      const int best = o.best_action(cf);
      for (int a = 0; a < 32; ++a) {
        if (a != best) CHECK(o.preference_prob(x, cf.response(best), cf.response(a)) >= 0.5);
      }
      for (int a = 0; a < 32; a += 3) {
        for (int b = 1; b < 32; b += 5) {
          for (int d = 2; d < 32; d += 7) {
            if (a == b || b == d || a == d) continue;
            const bool ab = o.preference_prob(x, cf.response(a), cf.response(b)) > 0.5;
            const bool bd = o.preference_prob(x, cf.response(b), cf.response(d)) > 0.5;
            if (ab && bd) CHECK(o.preference_prob(x, cf.response(a), cf.response(d)) > 0.5);
          }
        }
      }
    }
  }
}

TEST_CASE("in-process endpoint counts queries") {
  const OracleSpec o = unit_oracle(LabelMode::Deterministic);
  InprocOracle ep(o);
  RngStream r(1);
  ep.label_pair(kCtx, resp(0, 0.0), resp(1, 1.0), r, 1);
  ep.label_pair(kCtx, resp(0, 0.0), resp(1, 1.0), r, 2);
  CHECK(ep.queries() == 2u);
}

TEST_CASE("names") {
  CHECK(parse_label_mode("bernoulli") == LabelMode::Bernoulli);
  CHECK(parse_reward_kind(to_string(RewardKind::Mlp)) == RewardKind::Mlp);
  CHECK_THROWS_AS(parse_label_mode("noisy"), InputError);
}
