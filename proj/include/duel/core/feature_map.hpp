// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "duel/core/rng.hpp"
#include "duel/core/types.hpp"

namespace duel {

struct FeatureMapConfig {
  std::uint64_t seed = 2024;
  std::size_t context_dim = 8;   // d
  std::size_t feature_dim = 32;  // p
  std::size_t num_actions = 32;  // N_A
  std::size_t embed_dim = 8;
  double gain = 1.0;  // pre-activation std for unit-variance inputs
};

/// Fixed random joint feature map phi(x, a) = tanh(W [x; e_a] + b).
///
/// W, b and the action embeddings e_a are drawn once from the seed. W is
/// stored split into its context block and its embedding block so the context
/// half is computed once per context and shared by all actions.
class FeatureMap {
 public:
  explicit FeatureMap(const FeatureMapConfig& cfg);

  const FeatureMapConfig& config() const { return cfg_; }
  std::size_t context_dim() const { return cfg_.context_dim; }
  std::size_t feature_dim() const { return cfg_.feature_dim; }
  std::size_t num_actions() const { return cfg_.num_actions; }

  /// phi(x, a). Throws InputError on a dimension mismatch or bad action id.
  Vec apply(const ContextVec& x, int action_id) const;

  /// phi(x, a) for every action; rows are bit-identical to apply().
  ContextFeatures apply_all(const ContextVec& x) const;

  /// Draws a context from N(0, I_d).
  ContextVec sample_context(RngStream& rng) const;

  /// Order-sensitive digest of all weights, for checkpoint compatibility checks.
  std::uint64_t digest() const;

 private:
  void check_context(const ContextVec& x) const;
  void project_context(const ContextVec& x, Vec& out) const;

  FeatureMapConfig cfg_;
  Vec w_context_;     // [p x d]
  Vec action_terms_;  // [N_A x p]: W_embed e_a + b
};

}  // namespace duel
