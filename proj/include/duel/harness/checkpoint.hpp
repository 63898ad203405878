// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "duel/erm.hpp"
#include "duel/harness/config.hpp"
#include "duel/policy.hpp"

namespace duel::harness {

inline constexpr int kCheckpointFormat = 1;

/// JSON checkpoints. Doubles are written in shortest round-trip form, so a
/// save/load cycle reproduces every parameter bit for bit.
struct PolicyCheckpoint {
  SoftmaxPolicy policy;
  std::uint64_t feature_map_digest = 0;
  std::uint64_t config_hash = 0;
  ExperimentConfig config;

  bool operator==(const PolicyCheckpoint&) const = default;
};

struct ErmCheckpoint {
  EpistemicRewardModel model;
  std::uint64_t feature_map_digest = 0;
  std::uint64_t config_hash = 0;
  ExperimentConfig config;

  bool operator==(const ErmCheckpoint&) const = default;
};

nlohmann::ordered_json to_json(const PolicyCheckpoint& c);
nlohmann::ordered_json to_json(const ErmCheckpoint& c);
/// Throw InputError on a wrong kind, format or a config whose hash disagrees.
PolicyCheckpoint policy_checkpoint_from_json(const nlohmann::json& j);
ErmCheckpoint erm_checkpoint_from_json(const nlohmann::json& j);

void save(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace duel::harness
