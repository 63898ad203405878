// SPDX-License-Identifier: Apache-2.0
#include "duel/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "duel/core/math.hpp"
#include "duel/simd/kernels.hpp"

namespace duel {

std::string_view to_string(DapKind k) {
  switch (k) {
    case DapKind::DPO: return "dpo";
    case DapKind::IPO: return "ipo";
    case DapKind::SLiC: return "slic";
  }
  return "?";
}

DapKind parse_dap_kind(std::string_view s) {
  if (s == "dpo") return DapKind::DPO;
  if (s == "ipo") return DapKind::IPO;
  if (s == "slic") return DapKind::SLiC;
  throw InputError("unknown optimizer '" + std::string(s) + "'");
}

double default_beta(DapKind k) { return k == DapKind::DPO ? 0.1 : 0.2; }

namespace {

void check_policy(const SoftmaxPolicy& pol, std::size_t feature_dim) {
  if (pol.theta.size() != feature_dim) throw InputError("policy: theta dimension mismatch");
  if (!(pol.eta > 0.0)) throw InputError("policy: temperature must be positive");
}

}  // namespace

Vec logits(const SoftmaxPolicy& pol, const ContextFeatures& cf) {
  check_policy(pol, cf.feature_dim);
  Vec out(cf.num_actions);
  simd::gemv(cf.table, cf.num_actions, cf.feature_dim, pol.theta, nullptr, out);
  for (double& v : out) v /= pol.eta;
  return out;
}

Vec probabilities(const SoftmaxPolicy& pol, const ContextFeatures& cf) {
  Vec z = logits(pol, cf);
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : z) v /= s;
  return z;
}

double log_prob(const SoftmaxPolicy& pol, const ContextFeatures& cf, int action_id) {
  if (action_id < 0 || static_cast<std::size_t>(action_id) >= cf.num_actions) {
    throw InputError("log_prob: action id " + std::to_string(action_id) + " out of range");
  }
  const Vec z = logits(pol, cf);
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return z[static_cast<std::size_t>(action_id)] - mx - std::log(s);
}

int sample_action(const SoftmaxPolicy& pol, const ContextFeatures& cf, RngStream& rng) {
  const Vec probs = probabilities(pol, cf);
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    cum += probs[a];
    if (u < cum) return static_cast<int>(a);
  }
  // u landed in the rounding gap above the final partial sum.
  for (std::size_t a = probs.size(); a-- > 0;) {
    if (probs[a] > 0.0) return static_cast<int>(a);
  }
  return 0;
}

std::vector<ResponseRef> sample_candidates(const SoftmaxPolicy& pol, const ContextFeatures& cf,
                                           std::size_t M, RngStream& rng) {
  const Vec probs = probabilities(pol, cf);
  std::vector<ResponseRef> out;
  std::vector<char> seen(cf.num_actions, 0);
  for (std::size_t i = 0; i < M; ++i) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = probs.size() - 1;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      cum += probs[a];
      if (u < cum) {
        pick = a;
        break;
      }
    }
    while (probs[pick] == 0.0 && pick > 0) --pick;
    if (!seen[pick]) {
      seen[pick] = 1;
      out.push_back(cf.response(static_cast<int>(pick)));
    }
  }
  return out;
}

double log_ratio_margin(const SoftmaxPolicy& pol, const ReferencePolicy& ref, const PreferenceTriplet& t) {
  const auto& fw = t.winner.features;
  const auto& fl = t.loser.features;
  check_policy(pol, fw.size());
  const double pol_part = (simd::dot(pol.theta, fw) - simd::dot(pol.theta, fl)) / pol.eta;
  const double ref_part =
      (simd::dot(ref.policy.theta, fw) - simd::dot(ref.policy.theta, fl)) / ref.policy.eta;
  return pol_part - ref_part;
}

namespace {

void check_triplet(const DapLossKind& kind, const PreferenceTriplet& t) {
  if (t.winner.action_id == t.loser.action_id) throw InputError("dap_loss: winner equals loser");
  if (!(kind.beta > 0.0)) throw InputError("dap_loss: beta must be positive");
}

// dF/dh for the loss as a function of the margin h.
double loss_slope(const DapLossKind& kind, double h) {
  const double b = kind.beta;
  switch (kind.kind) {
    case DapKind::DPO: return -b * sigmoid(-b * h);
    case DapKind::IPO: return 2.0 * (h - 1.0 / (2.0 * b));
    case DapKind::SLiC: return (1.0 - b * h > 0.0) ? -b : 0.0;
  }
  return 0.0;
}

}  // namespace

double dap_loss(const DapLossKind& kind, const SoftmaxPolicy& pol, const ReferencePolicy& ref,
                const PreferenceTriplet& t) {
  check_triplet(kind, t);
  const double h = log_ratio_margin(pol, ref, t);
  const double b = kind.beta;
  switch (kind.kind) {
    case DapKind::DPO: return softplus(-b * h);
    case DapKind::IPO: {
      const double d = h - 1.0 / (2.0 * b);
      return d * d;
    }
    case DapKind::SLiC: return std::max(0.0, 1.0 - b * h);
  }
  return 0.0;
}

Vec dap_grad(const DapLossKind& kind, const SoftmaxPolicy& pol, const ReferencePolicy& ref,
             std::span<const PreferenceTriplet> batch) {
  if (batch.empty()) throw InputError("dap_grad: empty batch");
  Vec grad(pol.theta.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    check_triplet(kind, t);
    const double h = log_ratio_margin(pol, ref, t);
    // dh/dtheta = (phi+ - phi-) / eta
    const double c = loss_slope(kind, h) * inv_n / pol.eta;
    simd::axpy(c, t.winner.features, grad);
    simd::axpy(-c, t.loser.features, grad);
  }
  return grad;
}

UpdateStatus policy_update(SoftmaxPolicy& pol, std::span<const PreferenceTriplet> batch,
                           const DapLossKind& kind, const ReferencePolicy& ref, double lr) {
  if (batch.empty()) return UpdateStatus::SkippedEmpty;
  const Vec g = dap_grad(kind, pol, ref, batch);
  simd::axpy(-lr, g, pol.theta);
  return UpdateStatus::Ok;
}

int greedy_action(const SoftmaxPolicy& pol, const ContextFeatures& cf) {
  check_policy(pol, cf.feature_dim);
  Vec scores(cf.num_actions);
  simd::gemv(cf.table, cf.num_actions, cf.feature_dim, pol.theta, nullptr, scores);
  int best = 0;
  for (std::size_t a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  return best;
}

ResponseRef greedy_response(const SoftmaxPolicy& pol, const ContextFeatures& cf) {
  return cf.response(greedy_action(pol, cf));
}

}  // namespace duel
