// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "duel/agent.hpp"
#include "duel/harness/config.hpp"
#include "duel/harness/runlog.hpp"
#include "duel/metrics.hpp"

namespace duel::harness {

/// The fixed testbed shared by every agent seed: feature map, ground-truth
/// oracle, reference policy and the holdout evaluation suite. All of it is
/// drawn from env_seed.
struct Environment {
  FeatureMap fm;
  OracleSpec oracle;
  SoftmaxPolicy reference;
  EvalSuite suite;

  explicit Environment(const ExperimentConfig& cfg);
};

/// Final model state of a run, for checkpoints and follow-up analysis.
struct RunArtifacts {
  SoftmaxPolicy policy;
  std::optional<EpistemicRewardModel> erm;
};

struct RunOptions {
  /// When set, header.json, log.csv and records.jsonl are streamed there and
  /// policy.json (plus erm.json for SEA agents) are written at the end.
  std::optional<std::filesystem::path> out_dir;
  /// Reuse a prebuilt environment (must match the config).
  const Environment* environment = nullptr;
  /// Receives the final model state when set.
  RunArtifacts* artifacts = nullptr;
};

/// Runs the configured agent until `budget` oracle labels are spent (or the
/// round cap). Throws ConfigError on invalid configs and OracleUnavailable when
/// a remote oracle cannot be reached.
RunLog run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// The same config over seeds seed, seed+1, ..., one subdirectory per seed when
/// out_dir is set.
std::vector<RunLog> run_sweep(const ExperimentConfig& cfg, std::size_t num_seeds,
                              const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Endpoint named by cfg.oracle: the in-process oracle or a service client.
std::unique_ptr<LabelingEndpoint> make_endpoint(const ExperimentConfig& cfg, const OracleSpec& oracle);

}  // namespace duel::harness
