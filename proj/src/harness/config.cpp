// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <string>
#include <vector>

namespace duel::harness {

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::SeaBai: return "sea-bai";
    case AgentKind::SeaEe: return "sea-ee";
    case AgentKind::SeaUncertainty: return "sea-uncertainty";
    case AgentKind::PassiveOnline: return "passive-online";
    case AgentKind::Offline: return "offline";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view s) {
  for (auto k : {AgentKind::SeaBai, AgentKind::SeaEe, AgentKind::SeaUncertainty, AgentKind::PassiveOnline,
                 AgentKind::Offline}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown agent '" + std::string(s) + "'");
}

namespace {

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(v) + "'");
  return out;
}

template <class F>
auto rethrow_as_config(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

struct Field {
  std::string_view key;
  std::function<nlohmann::ordered_json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<void(ExperimentConfig&, const nlohmann::json&)> set_json;
};

template <class T>
Field numeric(std::string_view key, T ExperimentConfig::*m) {
  return Field{key, [m](const ExperimentConfig& c) { return nlohmann::ordered_json(c.*m); },
               [key, m](ExperimentConfig& c, std::string_view v) { c.*m = parse_number<T>(key, v); },
               [m](ExperimentConfig& c, const nlohmann::json& j) { c.*m = j.get<T>(); }};
}

template <class E>
Field enumerated(std::string_view key, E ExperimentConfig::*m, E (*parse)(std::string_view)) {
  auto set = [key, m, parse](ExperimentConfig& c, std::string_view v) {
    c.*m = rethrow_as_config(key, [&] { return parse(v); });
  };
  return Field{key, [m](const ExperimentConfig& c) { return nlohmann::ordered_json(std::string(to_string(c.*m))); },
               set, [set](ExperimentConfig& c, const nlohmann::json& j) { set(c, j.get<std::string>()); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(enumerated("agent", &C::agent, &parse_agent_kind));
    f.push_back(enumerated("optimizer", &C::optimizer, &parse_dap_kind));
    f.push_back(numeric("context-dim", &C::context_dim));
    f.push_back(numeric("feature-dim", &C::feature_dim));
    f.push_back(numeric("num-actions", &C::num_actions));
    f.push_back(numeric("embed-dim", &C::embed_dim));
    f.push_back(numeric("feature-gain", &C::feature_gain));
    f.push_back(numeric("env-seed", &C::env_seed));
    f.push_back(enumerated("reward", &C::reward, &parse_reward_kind));
    f.push_back(enumerated("mode", &C::label_mode, &parse_label_mode));
    f.push_back(Field{"oracle", [](const C& c) { return nlohmann::ordered_json(c.oracle); },
                      [](C& c, std::string_view v) { c.oracle = std::string(v); },
                      [](C& c, const nlohmann::json& j) { c.oracle = j.get<std::string>(); }});
    f.push_back(numeric("ref-sharpness", &C::ref_sharpness));
    f.push_back(numeric("ref-quality", &C::ref_quality));
    f.push_back(numeric("num-heads", &C::num_heads));
    f.push_back(numeric("num-candidates", &C::num_candidates));
    f.push_back(numeric("lambda", &C::lambda));
    f.push_back(numeric("gamma", &C::gamma));
    f.push_back(numeric("burn-in", &C::burn_in));
    f.push_back(numeric("m-batches", &C::m_batches));
    f.push_back(numeric("batch", &C::batch));
    f.push_back(numeric("erm-batch", &C::erm_batch));
    f.push_back(numeric("erm-lr", &C::erm_lr));
    f.push_back(numeric("policy-lr", &C::policy_lr));
    f.push_back(numeric("eta", &C::eta));
    f.push_back(numeric("beta", &C::beta));
    f.push_back(numeric("retry-cap", &C::retry_cap));
    f.push_back(numeric("init-scale", &C::init_scale));
    f.push_back(enumerated("update-rule", &C::update_rule, &parse_update_rule));
    f.push_back(enumerated("lr-schedule", &C::lr_schedule, &parse_lr_schedule));
    f.push_back(numeric("budget", &C::budget));
    f.push_back(numeric("eval-every", &C::eval_every));
    f.push_back(numeric("eval-contexts", &C::eval_contexts));
    f.push_back(numeric("seed", &C::seed));
    f.push_back(numeric("offline-epochs", &C::offline_epochs));
    f.push_back(numeric("max-rounds", &C::max_rounds));
    return f;
  }();
  return table;
}

}  // namespace

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  if (c.beta < 0.0) c.beta = default_beta(c.optimizer);
  if (c.retry_cap == 0) c.retry_cap = 2 * c.num_heads;
  if (c.max_rounds == 0) c.max_rounds = 4 * c.budget + 1000;
  return c;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(context_dim >= 1, "context-dim must be >= 1");
  need(feature_dim >= 1, "feature-dim must be >= 1");
  need(num_actions >= 2, "num-actions must be >= 2");
  need(embed_dim >= 1, "embed-dim must be >= 1");
  need(std::isfinite(feature_gain) && feature_gain > 0.0, "feature-gain must be > 0");
  need(std::isfinite(ref_sharpness) && ref_sharpness >= 0.0, "ref-sharpness must be >= 0");
  need(ref_quality >= -1.0 && ref_quality <= 1.0, "ref-quality must be in [-1, 1]");
  need(num_heads >= 1, "num-heads must be >= 1");
  need(num_candidates >= 2, "num-candidates must be >= 2");
  need(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
  need(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0, 1]");
  need(m_batches >= 1, "m-batches must be >= 1");
  need(batch >= 1, "batch must be >= 1");
  need(erm_batch >= 1, "erm-batch must be >= 1");
  need(std::isfinite(erm_lr) && erm_lr > 0.0, "erm-lr must be > 0");
  need(std::isfinite(policy_lr) && policy_lr > 0.0, "policy-lr must be > 0");
  need(std::isfinite(eta) && eta > 0.0, "eta must be > 0");
  need(std::isfinite(beta), "beta must be finite");
  need(std::isfinite(init_scale) && init_scale > 0.0, "init-scale must be > 0");
  need(eval_every >= 1, "eval-every must be >= 1");
  need(eval_contexts >= 1, "eval-contexts must be >= 1");
  if (remote_oracle()) parse_tcp_address(oracle);
}

FeatureMapConfig ExperimentConfig::feature_map() const {
  return FeatureMapConfig{env_seed, context_dim, feature_dim, num_actions, embed_dim, feature_gain};
}

AgentConfig ExperimentConfig::agent_config() const {
  const ExperimentConfig c = resolved();
  AgentConfig a;
  switch (c.agent) {
    case AgentKind::SeaBai: a.strategy.kind = StrategyKind::BAITS; break;
    case AgentKind::SeaEe: a.strategy.kind = StrategyKind::EETS; break;
    case AgentKind::SeaUncertainty: a.strategy.kind = StrategyKind::UncertaintyPair; break;
    case AgentKind::PassiveOnline:
    case AgentKind::Offline: a.strategy.kind = StrategyKind::PassivePair; break;
  }
  a.strategy.retry_cap = c.retry_cap;
  a.gamma = c.gamma;
  a.gamma_burn_in = c.burn_in;
  a.num_candidates = c.num_candidates;
  a.m_batches = c.m_batches;
  a.erm_batch = c.erm_batch;
  a.policy_batch = c.batch;
  a.dap = DapLossKind{c.optimizer, c.beta};
  a.policy_lr = c.policy_lr;
  a.eta = c.eta;
  a.erm.num_heads = c.num_heads;
  a.erm.lambda_reg = c.lambda;
  a.erm.learning_rate = c.erm_lr;
  a.erm.init_scale = c.init_scale;
  a.update_rule = c.update_rule;
  a.lr_schedule = c.lr_schedule;
  a.schedule_horizon = c.agent == AgentKind::Offline ? c.budget * c.offline_epochs : c.round_cap();
  return a;
}

std::uint64_t ExperimentConfig::round_cap() const { return resolved().max_rounds; }

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  const ExperimentConfig r = c.resolved();
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& f : fields()) j[std::string(f.key)] = f.get(r);
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  ExperimentConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const auto& f : fields()) {
      if (f.key != it.key()) continue;
      rethrow_as_config(f.key, [&] { f.set_json(c, it.value()); });
      known = true;
      break;
    }
    if (!known) throw ConfigError("unknown config key '" + it.key() + "'");
  }
  return c;
}

std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_field(ExperimentConfig& c, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(c, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(ExperimentConfig& c, std::istream& in) {
  auto trim = [](std::string_view v) {
    const auto b = v.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return v.substr(b, v.find_last_not_of(" \t\r") - b + 1);
  };
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    std::string_view value = trim(v.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    try {
      set_field(c, trim(v.substr(0, eq)), value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
}

std::pair<std::string, std::uint16_t> parse_tcp_address(std::string_view addr, bool allow_ephemeral) {
  constexpr std::string_view scheme = "tcp://";
  std::string_view rest = addr;
  if (rest.starts_with(scheme)) rest.remove_prefix(scheme.size());
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw ConfigError("oracle address must look like tcp://host:port, got '" + std::string(addr) + "'");
  const auto port = parse_number<unsigned>("oracle", rest.substr(colon + 1));
  if ((port == 0 && !allow_ephemeral) || port > 65535) throw ConfigError("oracle port out of range");
  return {std::string(rest.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a(to_json(c).dump()); }

}  // namespace duel::harness
