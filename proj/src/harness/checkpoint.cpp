// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/checkpoint.hpp"

#include <fstream>

namespace duel::harness {

namespace {

nlohmann::ordered_json mlp_to_json(const Mlp& m) {
  nlohmann::ordered_json j;
  j["input_dim"] = m.input_dim();
  j["hidden"] = m.hidden();
  j["params"] = Vec(m.params().begin(), m.params().end());
  return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m(j.at("input_dim").get<std::size_t>(), j.at("hidden").get<std::vector<std::size_t>>());
  const Vec p = j.at("params").get<Vec>();
  if (p.size() != m.num_params()) throw InputError("checkpoint: parameter count does not match the architecture");
  std::copy(p.begin(), p.end(), m.params().begin());
  return m;
}

void check_header(const nlohmann::json& j, std::string_view kind) {
  if (j.value("kind", std::string()) != kind)
    throw InputError("checkpoint: expected kind '" + std::string(kind) + "'");
  const int format = j.value("format", -1);
  if (format != kCheckpointFormat)
    throw InputError("checkpoint format mismatch: expected " + std::to_string(kCheckpointFormat) + ", found " +
                     std::to_string(format));
}

template <class C>
void header_fields(nlohmann::ordered_json& j, std::string_view kind, const C& c) {
  j["kind"] = kind;
  j["format"] = kCheckpointFormat;
  j["feature_map_digest"] = c.feature_map_digest;
  j["config_hash"] = c.config_hash;
  j["config"] = to_json(c.config);
}

template <class C>
void read_header_fields(const nlohmann::json& j, C& c) {
  c.feature_map_digest = j.at("feature_map_digest").get<std::uint64_t>();
  c.config_hash = j.at("config_hash").get<std::uint64_t>();
  c.config = config_from_json(j.at("config"));
  if (config_hash(c.config) != c.config_hash) throw InputError("checkpoint: config hash mismatch");
}

template <class F>
auto wrap_json_errors(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace

nlohmann::ordered_json to_json(const PolicyCheckpoint& c) {
  nlohmann::ordered_json j;
  header_fields(j, "policy", c);
  j["eta"] = c.policy.eta;
  j["theta"] = c.policy.theta;
  return j;
}

nlohmann::ordered_json to_json(const ErmCheckpoint& c) {
  nlohmann::ordered_json j;
  header_fields(j, "erm", c);
  j["lambda"] = c.model.lambda_reg();
  j["learning_rate"] = c.model.learning_rate();
  auto heads = nlohmann::ordered_json::array();
  for (const auto& h : c.model.heads()) {
    nlohmann::ordered_json hj;
    hj["weights"] = mlp_to_json(h.weights());
    hj["anchor"] = mlp_to_json(h.anchor());
    heads.push_back(std::move(hj));
  }
  j["heads"] = std::move(heads);
  return j;
}

PolicyCheckpoint policy_checkpoint_from_json(const nlohmann::json& j) {
  return wrap_json_errors([&] {
    check_header(j, "policy");
    PolicyCheckpoint c;
    read_header_fields(j, c);
    c.policy.eta = j.at("eta").get<double>();
    c.policy.theta = j.at("theta").get<Vec>();
    return c;
  });
}

ErmCheckpoint erm_checkpoint_from_json(const nlohmann::json& j) {
  return wrap_json_errors([&] {
    check_header(j, "erm");
    std::vector<RewardHead> heads;
    for (const auto& hj : j.at("heads")) heads.emplace_back(mlp_from_json(hj.at("weights")), mlp_from_json(hj.at("anchor")));
    if (heads.empty()) throw InputError("checkpoint: no heads");
    ErmCheckpoint c{EpistemicRewardModel(std::move(heads), j.at("lambda").get<double>(),
                                         j.at("learning_rate").get<double>()),
                    0, 0, {}};
    read_header_fields(j, c);
    return c;
  });
}

void save(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw StateError("cannot write " + path.string());
  out << j.dump() << '\n';
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace duel::harness
