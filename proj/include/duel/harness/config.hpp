// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "duel/agent.hpp"
#include "duel/core/feature_map.hpp"
#include "duel/core/optim.hpp"
#include "duel/oracle.hpp"
#include "duel/policy.hpp"

namespace duel::harness {

enum class AgentKind { SeaBai, SeaEe, SeaUncertainty, PassiveOnline, Offline };

std::string_view to_string(AgentKind k);
AgentKind parse_agent_kind(std::string_view s);

/// Thrown for any invalid configuration value; the CLI maps it to exit code 2.
struct ConfigError : InputError {
  using InputError::InputError;
};

/// Every knob of one run. Key names double as CLI flag names and config-file
/// keys (`--erm-lr` <-> `erm-lr = ...`).
struct ExperimentConfig {
  AgentKind agent = AgentKind::SeaBai;
  DapKind optimizer = DapKind::DPO;

  // environment
  std::size_t context_dim = 8;
  std::size_t feature_dim = 32;
  std::size_t num_actions = 32;
  std::size_t embed_dim = 8;
  double feature_gain = 1.0;
  std::uint64_t env_seed = 2024;
  RewardKind reward = RewardKind::Mlp;
  LabelMode label_mode = LabelMode::Deterministic;
  std::string oracle = "inproc";  // or tcp://host:port
  // Reference (starting) policy: logit spread across actions and cosine of its
  // direction with the best linear fit of r*. Zero sharpness gives uniform.
  double ref_sharpness = 0.0;
  double ref_quality = 0.0;

  // agent
  std::size_t num_heads = 20;       // K
  std::size_t num_candidates = 20;  // M
  double lambda = 0.5;
  double gamma = 0.7;
  std::size_t burn_in = 1000;
  std::size_t m_batches = 5;
  std::size_t batch = 1;            // b, duels per policy step
  std::size_t erm_batch = 1;
  double erm_lr = 1e-2;
  double policy_lr = 5e-2;
  double eta = 0.7;
  double beta = -1.0;               // < 0: optimizer default
  std::size_t retry_cap = 0;        // 0: 2K
  double init_scale = 1.0;
  UpdateRule update_rule = UpdateRule::Sgd;
  LrSchedule lr_schedule = LrSchedule::Constant;

  // run
  std::uint64_t budget = 5000;      // Q
  std::size_t eval_every = 32;
  std::size_t eval_contexts = 256;
  std::uint64_t seed = 1;
  std::size_t offline_epochs = 4;
  std::uint64_t max_rounds = 0;     // 0: 4Q + 1000 safety cap

  /// Fills the "optimizer default" sentinels. Idempotent.
  ExperimentConfig resolved() const;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  FeatureMapConfig feature_map() const;
  AgentConfig agent_config() const;
  std::uint64_t round_cap() const;
  bool remote_oracle() const { return oracle != "inproc"; }

  bool operator==(const ExperimentConfig&) const = default;
};

/// Key order follows the struct; values are resolved.
nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Every config key, in declaration order.
std::vector<std::string_view> config_keys();

/// Sets one field from its textual key/value; unknown keys raise ConfigError.
void set_field(ExperimentConfig& c, std::string_view key, std::string_view value);

/// Applies a flat `key = value` file (one pair per line, `#` comments, blank
/// lines ignored) on top of `c`. Keys are the flag names without dashes.
/// Throws ConfigError naming the line for unknown keys or bad values.
void apply_config_text(ExperimentConfig& c, std::istream& in);

/// "tcp://host:port" -> (host, port). Port 0 is accepted only when
/// `allow_ephemeral` is set (binding). Throws ConfigError.
std::pair<std::string, std::uint16_t> parse_tcp_address(std::string_view addr, bool allow_ephemeral = false);

/// FNV-1a over the canonical JSON dump; stamps checkpoints.
std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace duel::harness
