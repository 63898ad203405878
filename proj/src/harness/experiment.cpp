// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/experiment.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "duel/harness/checkpoint.hpp"
#include "duel/harness/oracle_client.hpp"

namespace duel::harness {

namespace {

// Stand-in for a supervised fine-tuned starting policy. The direction mixes
// the least-squares fit of r* on the features (per-context centred) with an
// orthogonal random direction at cosine ref_quality; the norm sets the
// per-context logit standard deviation to ref_sharpness.
SoftmaxPolicy make_reference(const ExperimentConfig& cfg, const FeatureMap& fm, const OracleSpec& oracle) {
  SoftmaxPolicy ref{Vec(cfg.feature_dim, 0.0), cfg.eta};
  if (cfg.ref_sharpness == 0.0) return ref;
  const std::size_t p = cfg.feature_dim, n_a = cfg.num_actions, n_ctx = 256;
  RngStream rng(cfg.env_seed, "reference-policy");
  Eigen::MatrixXd X(n_ctx * n_a, p);
  Eigen::VectorXd y(n_ctx * n_a);
  for (std::size_t c = 0; c < n_ctx; ++c) {
    const ContextFeatures cf = fm.apply_all(fm.sample_context(rng));
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> F(cf.table.data(), n_a, p);
    Eigen::VectorXd r(n_a);
    for (std::size_t a = 0; a < n_a; ++a) r[a] = oracle.reward_features(cf.row(static_cast<int>(a)));
    X.middleRows(c * n_a, n_a) = F.rowwise() - F.colwise().mean();
    y.segment(c * n_a, n_a) = r.array() - r.mean();
  }
  const Eigen::MatrixXd G = X.transpose() * X + 1e-8 * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd w = G.ldlt().solve(X.transpose() * y);
  w.normalize();
  Eigen::VectorXd g(p);
  for (std::size_t i = 0; i < p; ++i) g[i] = rng.normal();
  g -= g.dot(w) * w;
  g.normalize();
  const double q = cfg.ref_quality;
  Eigen::VectorXd dir = q * w + std::sqrt(std::max(0.0, 1.0 - q * q)) * g;
  const double spread = std::sqrt((X * dir).squaredNorm() / static_cast<double>(X.rows()));
  dir *= cfg.ref_sharpness * cfg.eta / spread;
  for (std::size_t i = 0; i < p; ++i) ref.theta[i] = dir[i];
  return ref;
}

// Ground-truth bookkeeping for one duel: reference draw, judgements, regret.
class Scorekeeper {
 public:
  Scorekeeper(const Environment& env, RngStream rng) : env_(env), rng_(std::move(rng)) {}

  void score(DuelRecord& rec, const ContextFeatures& cf) {
    rec.reference = sample_action(env_.reference, cf, rng_);
    const ResponseRef ref = cf.response(rec.reference);
    const ResponseRef a = cf.response(rec.first);
    const ResponseRef b = cf.response(rec.second);
    rec.judge_first = env_.oracle.judge_win(cf.context, a, ref);
    rec.judge_second = env_.oracle.judge_win(cf.context, b, ref);
    rec.immediate_regret = immediate_regret(env_.oracle, cf, a, b);
    cumulative_regret_ += rec.immediate_regret;
    rec.cumulative_regret = cumulative_regret_;
    score_sum_ += judgement_score(rec.judge_first) + judgement_score(rec.judge_second);
    judged_ += 2;
    rec.online_win_rate = score_sum_ / static_cast<double>(judged_);
  }

 private:
  const Environment& env_;
  RngStream rng_;
  double cumulative_regret_ = 0.0;
  double score_sum_ = 0.0;
  std::uint64_t judged_ = 0;
};

class LogSink {
 public:
  LogSink(RunLog& log, const std::optional<std::filesystem::path>& dir) : log_(log) {
    if (dir) writer_.emplace(*dir, log.header);
  }
  void add(LogRow row, const DuelRecord* rec) {
    if (writer_) writer_->append(row, rec);
    log_.rows.push_back(std::move(row));
    if (rec) log_.records.push_back(*rec);
  }
  void flush() {
    if (writer_) writer_->flush();
  }

 private:
  RunLog& log_;
  std::optional<RunLogWriter> writer_;
};

void write_artifacts(const ExperimentConfig& cfg, const Environment& env, const RunArtifacts& art,
                     const RunOptions& opts) {
  if (opts.artifacts) *opts.artifacts = art;
  if (!opts.out_dir) return;
  const std::uint64_t digest = env.fm.digest();
  const std::uint64_t hash = config_hash(cfg);
  save(*opts.out_dir / "policy.json", to_json(PolicyCheckpoint{art.policy, digest, hash, cfg}));
  if (art.erm) save(*opts.out_dir / "erm.json", to_json(ErmCheckpoint{*art.erm, digest, hash, cfg}));
}

RunLog run_online(const ExperimentConfig& cfg, const Environment& env, LabelingEndpoint& endpoint,
                  const RunOptions& opts) {
  RunLog log;
  log.header = make_header(to_json(cfg));
  LogSink sink(log, opts.out_dir);

  const RngStream root(cfg.seed, "run");
  RngStream contexts = root.split("contexts");
  Scorekeeper keeper(env, root.split("online-references"));
  AgentConfig acfg = cfg.agent_config();
  acfg.reference_theta = env.reference.theta;
  SeaAgent agent(env.fm, acfg, endpoint, root.split("agent"));

  sink.add(initial_row(offline_win_rate(agent.policy(), env.suite, env.oracle)), nullptr);
  const std::uint64_t cap = cfg.round_cap();
  while (agent.oracle_labels() < cfg.budget && static_cast<std::uint64_t>(agent.rounds()) < cap) {
    const ContextVec x = env.fm.sample_context(contexts);
    DuelRecord rec = agent.step(x);
    keeper.score(rec, env.fm.apply_all(x));
    const bool last = agent.oracle_labels() >= cfg.budget || static_cast<std::uint64_t>(rec.round) >= cap;
    if (last || rec.round % static_cast<std::int64_t>(cfg.eval_every) == 0)
      rec.offline_win_rate = offline_win_rate(agent.policy(), env.suite, env.oracle);
    sink.add(project(rec), &rec);
    if (rec.round % 1000 == 0)
      spdlog::debug("seed {} round {} queries {} offline {}", cfg.seed, rec.round, rec.oracle_queries,
                    rec.offline_win_rate.value_or(-1.0));
  }
  if (agent.oracle_labels() < cfg.budget)
    spdlog::warn("round cap {} reached after {} of {} oracle labels", cap, agent.oracle_labels(), cfg.budget);
  sink.flush();
  RunArtifacts art{agent.policy(), std::nullopt};
  if (agent.erm()) art.erm = *agent.erm();
  write_artifacts(cfg, env, art, opts);
  return log;
}

RunLog run_offline(const ExperimentConfig& cfg, const Environment& env, LabelingEndpoint& endpoint,
                   const RunOptions& opts) {
  RunLog log;
  log.header = make_header(to_json(cfg));
  LogSink sink(log, opts.out_dir);

  const RngStream root(cfg.seed, "run");
  RngStream contexts = root.split("contexts");
  RngStream labels = root.split("labels");
  RngStream shuffle = root.split("shuffle");
  Scorekeeper keeper(env, root.split("online-references"));
  const AgentConfig acfg = cfg.agent_config();

  SoftmaxPolicy policy = env.reference;
  const ReferencePolicy ref{env.reference};
  Optimizer opt(OptimizerConfig{acfg.update_rule, acfg.policy_lr, acfg.lr_schedule,
                                acfg.schedule_horizon / acfg.policy_batch},
                cfg.feature_dim);

  sink.add(initial_row(offline_win_rate(policy, env.suite, env.oracle)), nullptr);
  const OfflineDataset data = collect_offline_dataset(env.fm, ref, endpoint, cfg.budget, contexts, labels);
  const std::uint64_t queries = endpoint.queries();

  std::vector<std::size_t> order(data.triplets.size());
  std::vector<PreferenceTriplet> pending;
  const std::int64_t total = static_cast<std::int64_t>(data.triplets.size() * cfg.offline_epochs);
  std::int64_t round = 0;
  for (std::size_t epoch = 0; epoch < cfg.offline_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
    for (std::size_t idx : order) {
      const PreferenceTriplet& t = data.triplets[idx];
      ++round;
      DuelRecord rec;
      rec.round = round;
      rec.context = t.context;
      rec.first = t.winner.action_id;
      rec.second = t.loser.action_id;
      rec.winner = t.winner.action_id;
      rec.loser = t.loser.action_id;
      rec.source = LabelSource::OracleLabel;
      rec.proposal_set_size = 2;
      rec.oracle_queries = queries;

      pending.push_back(t);
      if (pending.size() >= acfg.policy_batch) {
        opt.step(policy.theta, dap_grad(acfg.dap, policy, ref, pending));
        pending.clear();
      }
      keeper.score(rec, env.fm.apply_all(t.context));
      if (round == total || round % static_cast<std::int64_t>(cfg.eval_every) == 0)
        rec.offline_win_rate = offline_win_rate(policy, env.suite, env.oracle);
      sink.add(project(rec), &rec);
    }
  }
  sink.flush();
  write_artifacts(cfg, env, RunArtifacts{policy, std::nullopt}, opts);
  return log;
}

}  // namespace

Environment::Environment(const ExperimentConfig& cfg)
    : fm(cfg.feature_map()),
      oracle(OracleSpec::from_seed(cfg.reward, cfg.feature_dim, cfg.env_seed, cfg.label_mode)),
      reference(make_reference(cfg, fm, oracle)),
      suite(EvalSuite::build(fm, reference, cfg.eval_contexts, cfg.env_seed, cfg.eval_every)) {}

std::unique_ptr<LabelingEndpoint> make_endpoint(const ExperimentConfig& cfg, const OracleSpec& oracle) {
  if (!cfg.remote_oracle()) return std::make_unique<InprocOracle>(oracle);
  auto [host, port] = parse_tcp_address(cfg.oracle);
  return std::make_unique<RemoteOracle>(host, port, cfg.label_mode);
}

RunLog run_experiment(const ExperimentConfig& config, const RunOptions& opts) {
  config.validate();
  const ExperimentConfig cfg = config.resolved();
  std::optional<Environment> own;
  if (!opts.environment) own.emplace(cfg);
  const Environment& env = opts.environment ? *opts.environment : *own;
  if (env.fm.config().seed != cfg.env_seed || env.fm.feature_dim() != cfg.feature_dim ||
      env.suite.holdout.size() != cfg.eval_contexts || env.oracle.label_mode() != cfg.label_mode ||
      env.oracle.reward_kind() != cfg.reward || env.reference.eta != cfg.eta || env.reference != make_reference(cfg, env.fm, env.oracle))
    throw ConfigError("supplied environment does not match the config");
  auto endpoint = make_endpoint(cfg, env.oracle);
  spdlog::info("run agent={} optimizer={} seed={} budget={} oracle={}", to_string(cfg.agent),
               to_string(cfg.optimizer), cfg.seed, cfg.budget, cfg.oracle);
  RunLog log = cfg.agent == AgentKind::Offline ? run_offline(cfg, env, *endpoint, opts)
                                               : run_online(cfg, env, *endpoint, opts);
  const auto evals = log.evals();
  spdlog::info("done: {} rounds, {} oracle queries, final offline win rate {}", log.records.size(),
               log.rows.back().oracle_queries, evals.back().offline_win_rate);
  return log;
}

std::vector<RunLog> run_sweep(const ExperimentConfig& cfg, std::size_t num_seeds,
                              const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const Environment env(cfg.resolved());
  std::vector<RunLog> logs;
  for (std::size_t i = 0; i < num_seeds; ++i) {
    ExperimentConfig c = cfg;
    c.seed = cfg.seed + i;
    RunOptions opts;
    opts.environment = &env;
    if (out_dir) opts.out_dir = *out_dir / ("seed-" + std::to_string(c.seed));
    logs.push_back(run_experiment(c, opts));
  }
  return logs;
}

}  // namespace duel::harness
