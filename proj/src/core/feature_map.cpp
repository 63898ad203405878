// SPDX-License-Identifier: Apache-2.0
#include "duel/core/feature_map.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "duel/core/errors.hpp"
#include "duel/simd/kernels.hpp"

namespace duel {

std::string_view to_string(LabelSource s) {
  return s == LabelSource::OracleLabel ? "oracle" : "synthetic";
}

FeatureMap::FeatureMap(const FeatureMapConfig& cfg) : cfg_(cfg) {
  if (cfg.context_dim == 0 || cfg.feature_dim == 0 || cfg.num_actions == 0 || cfg.embed_dim == 0) {
    throw InputError("FeatureMap: all dimensions must be positive");
  }
  const std::size_t d = cfg.context_dim, p = cfg.feature_dim, e = cfg.embed_dim;
  RngStream rng = RngStream(cfg.seed, "feature_map");
  RngStream w_rng = rng.split("weights");
  RngStream e_rng = rng.split("embeddings");

  if (!(cfg.gain > 0.0)) throw InputError("FeatureMap: gain must be positive");
  const double w_scale = cfg.gain / std::sqrt(static_cast<double>(d + e));
  Vec w_embed(p * e);
  Vec bias(p);
  w_context_.resize(p * d);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < d; ++c) w_context_[r * d + c] = w_scale * w_rng.normal();
    for (std::size_t c = 0; c < e; ++c) w_embed[r * e + c] = w_scale * w_rng.normal();
    bias[r] = 0.1 * w_rng.normal();
  }

  action_terms_.resize(cfg.num_actions * p);
  Vec emb(e);
  for (std::size_t a = 0; a < cfg.num_actions; ++a) {
    for (auto& v : emb) v = e_rng.normal();
    simd::gemv(w_embed, p, e, emb, bias.data(), std::span<double>(action_terms_.data() + a * p, p));
  }
}

void FeatureMap::check_context(const ContextVec& x) const {
  if (x.dim() != cfg_.context_dim) {
    throw InputError("FeatureMap: context dimension " + std::to_string(x.dim()) + ", expected " +
                     std::to_string(cfg_.context_dim));
  }
}

void FeatureMap::project_context(const ContextVec& x, Vec& out) const {
  out.resize(cfg_.feature_dim);
  simd::gemv(w_context_, cfg_.feature_dim, cfg_.context_dim, x.values, nullptr, out);
}

Vec FeatureMap::apply(const ContextVec& x, int action_id) const {
  check_context(x);
  if (action_id < 0 || static_cast<std::size_t>(action_id) >= cfg_.num_actions) {
    throw InputError("FeatureMap: action id " + std::to_string(action_id) + " out of range");
  }
  Vec proj;
  project_context(x, proj);
  const double* term = action_terms_.data() + static_cast<std::size_t>(action_id) * cfg_.feature_dim;
  for (std::size_t i = 0; i < cfg_.feature_dim; ++i) proj[i] = std::tanh(proj[i] + term[i]);
  return proj;
}

ContextFeatures FeatureMap::apply_all(const ContextVec& x) const {
  check_context(x);
  Vec proj;
  project_context(x, proj);
  ContextFeatures out;
  out.context = x;
  out.num_actions = cfg_.num_actions;
  out.feature_dim = cfg_.feature_dim;
  out.table.resize(cfg_.num_actions * cfg_.feature_dim);
  for (std::size_t a = 0; a < cfg_.num_actions; ++a) {
    const double* term = action_terms_.data() + a * cfg_.feature_dim;
    double* row = out.table.data() + a * cfg_.feature_dim;
    for (std::size_t i = 0; i < cfg_.feature_dim; ++i) row[i] = std::tanh(proj[i] + term[i]);
  }
  return out;
}

ContextVec FeatureMap::sample_context(RngStream& rng) const {
  ContextVec x;
  x.values.resize(cfg_.context_dim);
  for (auto& v : x.values) v = rng.normal();
  return x;
}

std::uint64_t FeatureMap::digest() const {
  std::uint64_t h = mix64(cfg_.seed);
  auto fold = [&h](const Vec& v) {
    for (double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      h = mix64(h ^ bits);
    }
  };
  fold(w_context_);
  fold(action_terms_);
  return h;
}

}  // namespace duel
