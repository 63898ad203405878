// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "duel/core/errors.hpp"
#include "duel/core/rng.hpp"
#include "duel/core/types.hpp"

namespace duel {

/// pi_theta(y | x) proportional to exp(theta . phi(x, y) / eta) over the universe.
struct SoftmaxPolicy {
  Vec theta;
  double eta = 0.7;

  bool operator==(const SoftmaxPolicy&) const = default;
};

/// The frozen reference policy; all-zero theta is the uniform policy.
struct ReferencePolicy {
  SoftmaxPolicy policy;
};

enum class DapKind { DPO, IPO, SLiC };

std::string_view to_string(DapKind k);
DapKind parse_dap_kind(std::string_view s);
/// Default beta per optimizer: DPO 0.1, IPO 0.2, SLiC 0.2.
double default_beta(DapKind k);

struct DapLossKind {
  DapKind kind = DapKind::DPO;
  double beta = 0.1;
};

/// theta . phi(x, a) / eta for every action of the context.
Vec logits(const SoftmaxPolicy& pol, const ContextFeatures& cf);
/// pi(. | x) as a probability vector.
Vec probabilities(const SoftmaxPolicy& pol, const ContextFeatures& cf);

/// log pi(y | x), max-subtracted logsumexp. Throws InputError on a bad action.
double log_prob(const SoftmaxPolicy& pol, const ContextFeatures& cf, int action_id);

/// M draws with replacement from pi(. | x), deduplicated keeping first occurrence.
std::vector<ResponseRef> sample_candidates(const SoftmaxPolicy& pol, const ContextFeatures& cf,
                                           std::size_t M, RngStream& rng);
/// One draw from pi(. | x).
int sample_action(const SoftmaxPolicy& pol, const ContextFeatures& cf, RngStream& rng);

/// Log-ratio margin h = [log pi(y+) - log pi_ref(y+)] - [log pi(y-) - log pi_ref(y-)].
///
/// Both normalizers cancel within a context, so only the two responses'
/// features are needed.
double log_ratio_margin(const SoftmaxPolicy& pol, const ReferencePolicy& ref, const PreferenceTriplet& t);

/// Per-triplet DPO / IPO / SLiC loss.
double dap_loss(const DapLossKind& kind, const SoftmaxPolicy& pol, const ReferencePolicy& ref,
                const PreferenceTriplet& t);
/// Mean gradient of dap_loss over the batch with respect to theta. The SLiC
/// hinge uses subgradient 0 at its kink. Throws InputError on an empty batch.
Vec dap_grad(const DapLossKind& kind, const SoftmaxPolicy& pol, const ReferencePolicy& ref,
             std::span<const PreferenceTriplet> batch);

/// theta <- theta - lr * dap_grad. Empty batch: no-op, SkippedEmpty.
UpdateStatus policy_update(SoftmaxPolicy& pol, std::span<const PreferenceTriplet> batch,
                           const DapLossKind& kind, const ReferencePolicy& ref, double lr);

/// argmax_a theta . phi(x, a), ties to the lower action id.
ResponseRef greedy_response(const SoftmaxPolicy& pol, const ContextFeatures& cf);
int greedy_action(const SoftmaxPolicy& pol, const ContextFeatures& cf);

}  // namespace duel
