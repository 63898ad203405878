// SPDX-License-Identifier: Apache-2.0
// duelalign: run, sweep and evaluate dueling-bandit alignment agents, or serve
// the preference oracle over TCP.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "duel/harness/checkpoint.hpp"
#include "duel/harness/config.hpp"
#include "duel/harness/experiment.hpp"
#include "duel/harness/logging.hpp"
#include "duel/harness/oracle_client.hpp"
#include "duel/harness/oracle_service.hpp"
#include "duel/simd/kernels.hpp"

namespace {

using namespace duel;
using namespace duel::harness;

constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;

// Registers one string option per config key; config-file keys use the same names.
struct ConfigOptions {
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    for (auto key : config_keys()) {
      const std::string k(key);
      app->add_option("--" + k, values[k], "override '" + k + "'");
    }
  }

  ExperimentConfig build(CLI::App* app, const std::string& config_file) const {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot read config file " + config_file);
      apply_config_text(cfg, in);
    }
    for (const auto& [k, v] : values) {
      if (app->count("--" + k) > 0) set_field(cfg, k, v);
    }
    return cfg;
  }
};

int serve(const std::string& addr, std::size_t max_batch, int max_delay_ms, const std::string& reward,
          const std::string& mode, std::uint64_t env_seed, std::size_t feature_dim) {
  auto [host, port] = parse_tcp_address(addr, true);
  const OracleSpec oracle =
      OracleSpec::from_seed(parse_reward_kind(reward), feature_dim, env_seed, parse_label_mode(mode));
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  OracleServer server(oracle, ServerOptions{host, port, max_batch, std::chrono::milliseconds(max_delay_ms)});
  server.start();
  std::printf("listening on %s:%u\n", host.c_str(), static_cast<unsigned>(server.port()));
  std::fflush(stdout);
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  const ServerStats s = server.stats();
  spdlog::info("served {} requests ({} pairs) in {} batches, largest {}", s.requests, s.pairs, s.batches,
               s.largest_batch);
  return 0;
}

int evaluate(const std::string& policy_path, const std::string& erm_path, std::size_t bon, std::uint64_t seed) {
  const PolicyCheckpoint pc = policy_checkpoint_from_json(load_json(policy_path));
  const Environment env(pc.config.resolved());
  if (env.fm.digest() != pc.feature_map_digest)
    throw InputError("checkpoint feature map does not match the environment rebuilt from its config");
  nlohmann::ordered_json out;
  out["offline_win_rate"] = offline_win_rate(pc.policy, env.suite, env.oracle);
  if (bon > 0) {
    if (erm_path.empty()) throw InputError("--bon needs --erm");
    const ErmCheckpoint ec = erm_checkpoint_from_json(load_json(erm_path));
    RngStream rng(seed, "best-of-n");
    double s = 0.0;
    for (std::size_t i = 0; i < env.suite.holdout.size(); ++i) {
      const ContextFeatures& cf = env.suite.holdout[i];
      const ResponseRef y = best_of_n(pc.policy, ec.model, cf, bon, rng);
      s += judgement_score(env.oracle.judge_win(cf.context, y, cf.response(env.suite.references[i])));
    }
    out["best_of_n"] = bon;
    out["best_of_n_win_rate"] = s / static_cast<double>(env.suite.holdout.size());
  }
  std::cout << out.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Sample-efficient alignment agents on a synthetic contextual dueling bandit"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  ConfigOptions run_cfg;
  std::string out_dir, run_file;
  run->add_option("--config", run_file, "key = value config file; flags override it")->check(CLI::ExistingFile);
  run_cfg.attach(run);
  run->add_option("--out", out_dir, "output directory for logs and checkpoints");

  CLI::App* sweep = app.add_subcommand("sweep", "run a config over consecutive seeds");
  ConfigOptions sweep_cfg;
  std::string sweep_out, sweep_file;
  std::size_t num_seeds = 10;
  sweep->add_option("--config", sweep_file, "key = value config file; flags override it")->check(CLI::ExistingFile);
  sweep_cfg.attach(sweep);
  sweep->add_option("--out", sweep_out, "output directory; one subdirectory per seed");
  sweep->add_option("--seeds", num_seeds, "number of seeds, starting at --seed")->check(CLI::PositiveNumber);

  CLI::App* srv = app.add_subcommand("serve-oracle", "serve preference labels over TCP");
  std::string addr = "127.0.0.1:7878", reward = "mlp", mode = "deterministic";
  std::size_t max_batch = 32, feature_dim = 32;
  int max_delay_ms = 2;
  std::uint64_t env_seed = 2024;
  srv->add_option("--addr", addr, "host:port to bind; port 0 picks a free one");
  srv->add_option("--max-batch", max_batch, "requests per batch")->check(CLI::PositiveNumber);
  srv->add_option("--max-delay-ms", max_delay_ms, "flush delay after the first queued request")
      ->check(CLI::NonNegativeNumber);
  srv->add_option("--reward", reward, "linear or mlp");
  srv->add_option("--mode", mode, "bernoulli or deterministic");
  srv->add_option("--env-seed", env_seed, "oracle seed; must match the client's env-seed");
  srv->add_option("--feature-dim", feature_dim, "joint feature dimension");

  CLI::App* ev = app.add_subcommand("eval", "recompute the offline win rate of a checkpoint");
  std::string policy_path, erm_path;
  std::size_t bon = 0;
  std::uint64_t bon_seed = 1;
  ev->add_option("checkpoint", policy_path, "policy.json")->required()->check(CLI::ExistingFile);
  ev->add_option("--erm", erm_path, "erm.json, for --bon")->check(CLI::ExistingFile);
  ev->add_option("--bon", bon, "also report the Best-of-N win rate");
  ev->add_option("--seed", bon_seed, "Best-of-N sampling seed");

  CLI::App* info = app.add_subcommand("info", "print build and kernel information");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const ExperimentConfig cfg = run_cfg.build(run, run_file);
      RunOptions opts;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      const RunLog log = run_experiment(cfg, opts);
      if (out_dir.empty()) std::cout << log.csv();
      return 0;
    }
    if (*sweep) {
      const ExperimentConfig cfg = sweep_cfg.build(sweep, sweep_file);
      std::optional<std::filesystem::path> dir;
      if (!sweep_out.empty()) dir = sweep_out;
      const auto logs = run_sweep(cfg, num_seeds, dir);
      for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto evals = logs[i].evals();
        std::cout << "seed " << cfg.seed + i << " final_offline_win_rate " << evals.back().offline_win_rate << '\n';
      }
      return 0;
    }
    if (*srv) return serve(addr, max_batch, max_delay_ms, reward, mode, env_seed, feature_dim);
    if (*ev) return evaluate(policy_path, erm_path, bon, bon_seed);
    if (*info) {
      std::cout << "code_version " << code_version() << "\nkernels " << simd::isa_name(simd::active().isa) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const OracleUnavailable& e) {
    std::cerr << "oracle unavailable: " << e.what() << '\n';
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
