// SPDX-License-Identifier: Apache-2.0
// Exhaustive reference implementations of the duel selection rules, written
// against raw head outputs only. Shared by the unit and acceptance suites.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "duel/core/rng.hpp"
#include "duel/erm.hpp"

namespace duel::testing {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Population variance about the first sample; exactly zero for equal samples.
inline double centred_variance(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x - xs.front();
  mean /= n;
  double v = 0.0;
  for (double x : xs) v += (x - xs.front() - mean) * (x - xs.front() - mean);
  return v / n;
}

inline double head_out(const EpistemicRewardModel& m, std::size_t k, const ResponseRef& y) {
  return m.head(k).weights().forward(y.features);
}

// argmax of head k over the set; ties to the lower action id
inline int bf_argmax(const EpistemicRewardModel& m, std::size_t k, const std::vector<ResponseRef>& s,
                     int exclude = -1) {
  int best = -1;
  double best_r = 0.0;
  for (const auto& y : s) {
    if (y.action_id == exclude) continue;
    const double r = head_out(m, k, y);
    if (best < 0 || r > best_r || (r == best_r && y.action_id < best)) {
      best = y.action_id;
      best_r = r;
    }
  }
  return best;
}

inline double bf_pref_variance(const EpistemicRewardModel& m, const ResponseRef& a, const ResponseRef& b) {
  const std::size_t K = m.num_heads();
  std::vector<double> p(K);
  for (std::size_t k = 0; k < K; ++k) p[k] = logistic(head_out(m, k, a) - head_out(m, k, b));
  return centred_variance(p);
}

inline double bf_diff_variance(const EpistemicRewardModel& m, const ResponseRef& a, const ResponseRef& b) {
  const std::size_t K = m.num_heads();
  std::vector<double> d(K);
  for (std::size_t k = 0; k < K; ++k) d[k] = head_out(m, k, a) - head_out(m, k, b);
  return centred_variance(d);
}

inline int bf_second_bai(const EpistemicRewardModel& m, const std::vector<ResponseRef>& s, int first) {
  const ResponseRef* y1 = nullptr;
  for (const auto& y : s)
    if (y.action_id == first) y1 = &y;
  int best = -1;
  double best_v = 0.0;
  for (const auto& b : s) {
    if (b.action_id == first) continue;
    const double v = bf_pref_variance(m, *y1, b);
    if (best < 0 || v > best_v || (v == best_v && b.action_id < best)) {
      best = b.action_id;
      best_v = v;
    }
  }
  return best;
}

// (lower id, higher id) of the unordered pair with the largest difference variance
inline std::pair<int, int> bf_pair_uncertainty(const EpistemicRewardModel& m, const std::vector<ResponseRef>& s) {
  std::pair<int, int> best{-1, -1};
  double best_v = -1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i == j) continue;
      const std::pair<int, int> ids{std::min(s[i].action_id, s[j].action_id),
                                    std::max(s[i].action_id, s[j].action_id)};
      const double v = bf_diff_variance(m, s[i], s[j]);
      if (v > best_v || (v == best_v && ids < best)) {
        best_v = v;
        best = ids;
      }
    }
  }
  return best;
}

struct SelectionFixture {
  EpistemicRewardModel erm;
  std::vector<ResponseRef> candidates;
};

// Small random ensemble and proposal set. A quarter of the fixtures duplicate
// feature rows under different ids, and some use identical heads, so every
// tie-breaking path gets exercised.
inline SelectionFixture random_selection_fixture(RngStream& r) {
  const std::size_t p = 2 + r.uniform_index(6);
  ErmConfig cfg;
  cfg.num_heads = 1 + r.uniform_index(8);
  cfg.hidden = r.uniform() < 0.5 ? std::vector<std::size_t>{} : std::vector<std::size_t>{1 + r.uniform_index(6)};
  EpistemicRewardModel erm(p, cfg, r);
  if (cfg.num_heads > 1 && r.uniform() < 0.1) {
    for (std::size_t k = 1; k < erm.num_heads(); ++k) erm.heads()[k] = erm.heads()[0];
  }
  const std::size_t universe = 2 + r.uniform_index(30);
  const std::size_t n = 1 + r.uniform_index(std::min<std::size_t>(universe, 12));
  std::vector<int> ids(universe);
  for (std::size_t i = 0; i < universe; ++i) ids[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < n; ++i) std::swap(ids[i], ids[i + r.uniform_index(universe - i)]);
  std::vector<ResponseRef> cands;
  const bool dup = r.uniform() < 0.25;
  for (std::size_t i = 0; i < n; ++i) {
    Vec f(p);
    for (auto& v : f) v = std::tanh(r.normal());
    if (dup && i > 0 && r.uniform() < 0.5) f = cands[r.uniform_index(cands.size())].features;
    cands.push_back(ResponseRef{ids[i], std::move(f)});
  }
  return {std::move(erm), std::move(cands)};
}

}  // namespace duel::testing
