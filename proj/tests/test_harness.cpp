// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "duel/harness/checkpoint.hpp"
#include "duel/harness/config.hpp"
#include "duel/harness/experiment.hpp"
#include "duel/harness/oracle_client.hpp"
#include "duel/harness/oracle_service.hpp"
#include "duel/harness/runlog.hpp"
#include "duel/harness/wire.hpp"

using namespace duel;
using namespace duel::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> n{0};
    path = fs::temp_directory_path() / ("duel_harness_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int dial(std::uint16_t port) {
  addrinfo hints{}, *res = nullptr;
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  REQUIRE(::getaddrinfo("127.0.0.1", std::to_string(port).c_str(), &hints, &res) == 0);
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  REQUIRE(::connect(fd, res->ai_addr, res->ai_addrlen) == 0);
  ::freeaddrinfo(res);
  return fd;
}

wire::Request random_request(RngStream& r, std::size_t pairs, std::size_t p) {
  wire::Request req;
  req.id = r.next_u64();
  req.seed = r.next_u64();
  req.mode = r.uniform() < 0.5 ? LabelMode::Bernoulli : LabelMode::Deterministic;
  for (std::size_t i = 0; i < pairs; ++i) {
    wire::WirePair w;
    for (int k = 0; k < 3; ++k) w.ctx.push_back(r.normal());
    for (std::size_t k = 0; k < p; ++k) {
      w.fy.push_back(std::tanh(r.normal()));
      w.fyp.push_back(std::tanh(r.normal()));
    }
    req.pairs.push_back(std::move(w));
  }
  return req;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.budget = 120;
  c.eval_every = 16;
  c.eval_contexts = 32;
  c.num_heads = 4;
  c.burn_in = 40;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("codec round trip") {
    RngStream r(1);
    for (int i = 0; i < 20; ++i) {
      const wire::Request req = random_request(r, r.uniform_index(5), 1 + r.uniform_index(8));
      CHECK(wire::decode_request(wire::encode_request(req)) == req);
    }
    const wire::Response ok{7, {0, 1, 1}, {0.25, 0.5, 1e-300}, std::nullopt};
    CHECK(wire::decode_response(wire::encode_response(ok)) == ok);
    const wire::Response err{9, {}, {}, std::string("bad")};
    CHECK(wire::decode_response(wire::encode_response(err)) == err);
  }

  TEST_CASE("framing is a big-endian length prefix") {
    const std::string f = wire::frame("abc");
    REQUIRE(f.size() == 7u);
    CHECK(f.substr(0, 4) == std::string("\0\0\0\3", 4));
    const unsigned char pre[4] = {0x01, 0x02, 0x03, 0x04};
    CHECK(wire::frame_length(pre) == 0x01020304u);
  }

  TEST_CASE("schema violations") {
    CHECK_THROWS_AS(wire::decode_request("not json"), wire::ProtocolError);
    CHECK_THROWS_AS(wire::decode_request(R"({"id":1,"pairs":[],"mode":"sometimes","seed":0})"), wire::ProtocolError);
    CHECK_THROWS_AS(wire::decode_request(R"({"id":1,"pairs":[{"ctx":[],"fy":[1],"fyp":[1,2]}],"mode":"deterministic","seed":0})"),
                    wire::ProtocolError);
    CHECK_THROWS_AS(wire::decode_response(R"({"id":1,"winners":[2],"probs":[0.5]})"), wire::ProtocolError);
  }

  TEST_CASE("answer matches in-process labels") {
    const auto oracle = OracleSpec::from_seed(RewardKind::Mlp, 6, 3, LabelMode::Bernoulli);
    RngStream r(2);
    for (int i = 0; i < 50; ++i) {
      const wire::Request req = random_request(r, 4, 6);
      const wire::Response resp = wire::answer(oracle, req);
      REQUIRE(resp.winners.size() == 4u);
      for (std::size_t k = 0; k < 4; ++k) {
        const bool first = oracle.first_wins(req.pairs[k].fy, req.pairs[k].fyp, req.mode, req.seed, k, nullptr);
        CHECK(resp.winners[k] == (first ? 0 : 1));
      }
    }
    // wrong feature width reports an error instead of throwing
    const wire::Request bad = random_request(r, 1, 5);
    CHECK(wire::answer(oracle, bad).error.has_value());
  }
}

TEST_SUITE("oracle service") {
  TEST_CASE("single pair agrees with label_pair") {
    const auto oracle = OracleSpec::from_seed(RewardKind::Mlp, 32, 2024, LabelMode::Deterministic);
    OracleServer server(oracle, {});
    server.start();
    RemoteOracle client("127.0.0.1", server.port(), LabelMode::Deterministic);
    InprocOracle local(oracle);
    const FeatureMap fm({});
    RngStream ctx(3), ra(4), rb(4);
    for (int i = 0; i < 1000; ++i) {
      const ContextFeatures cf = fm.apply_all(fm.sample_context(ctx));
      const int a = static_cast<int>(ctx.uniform_index(32));
      const int b = (a + 1 + static_cast<int>(ctx.uniform_index(31))) % 32;
      const auto t1 = client.label_pair(cf.context, cf.response(a), cf.response(b), ra, i);
      const auto t2 = local.label_pair(cf.context, cf.response(a), cf.response(b), rb, i);
      REQUIRE(t1 == t2);
    }
    CHECK(client.queries() == 1000u);
    server.stop();
  }

  TEST_CASE("bernoulli labels agree with label_pair") {
    const auto oracle = OracleSpec::from_seed(RewardKind::Mlp, 32, 2024, LabelMode::Bernoulli);
    OracleServer server(oracle, {});
    server.start();
    RemoteOracle client("127.0.0.1", server.port(), LabelMode::Bernoulli);
    InprocOracle local(oracle);
    const FeatureMap fm({});
    RngStream ctx(5), ra(6), rb(6);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      const ContextFeatures cf = fm.apply_all(fm.sample_context(ctx));
      const auto t1 = client.label_pair(cf.context, cf.response(3), cf.response(17), ra, i);
      const auto t2 = local.label_pair(cf.context, cf.response(3), cf.response(17), rb, i);
      mismatches += t1 == t2 ? 0 : 1;
    }
    CHECK(mismatches == 0);
    server.stop();
  }

  TEST_CASE("100 concurrent requests, labels independent of batching") {
    const auto oracle = OracleSpec::from_seed(RewardKind::Mlp, 8, 9, LabelMode::Bernoulli);
    RngStream r(7);
    std::vector<wire::Request> reqs;
    for (int i = 0; i < 100; ++i) {
      reqs.push_back(random_request(r, 1 + r.uniform_index(3), 8));
      reqs.back().id = static_cast<std::uint64_t>(i + 1);
    }
    auto serve_all = [&](ServerOptions opts) {
      OracleServer server(oracle, opts);
      server.start();
      std::vector<wire::Response> out(reqs.size());
      std::vector<std::thread> threads;
      for (std::size_t i = 0; i < reqs.size(); ++i) {
        threads.emplace_back([&, i] {
          RemoteOracle c("127.0.0.1", server.port(), reqs[i].mode);
          out[i] = c.call(reqs[i]);
        });
      }
      for (auto& t : threads) t.join();
      const ServerStats s = server.stats();
      server.stop();
      return std::pair(out, s);
    };
    const auto [batched, bstats] = serve_all({"127.0.0.1", 0, 32, std::chrono::milliseconds(20)});
    const auto [single, sstats] = serve_all({"127.0.0.1", 0, 1, std::chrono::milliseconds(0)});
    CHECK(bstats.requests == 100u);
    CHECK(sstats.largest_batch == 1u);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      CHECK(batched[i].id == reqs[i].id);
      CHECK(batched[i].winners.size() == reqs[i].pairs.size());
      CHECK(batched[i].winners == single[i].winners);
      CHECK(batched[i] == wire::answer(oracle, reqs[i]));
    }
  }

  TEST_CASE("malformed frame gets an error response and a closed connection") {
    const auto oracle = OracleSpec::from_seed(RewardKind::Linear, 4, 1, LabelMode::Deterministic);
    OracleServer server(oracle, {});
    server.start();
    const int fd = dial(server.port());
    wire::write_frame(fd, R"({"id": 42, "pairs": "oops"})");
    const auto reply = wire::read_frame(fd, std::chrono::seconds(5));
    REQUIRE(reply.has_value());
    const wire::Response resp = wire::decode_response(*reply);
    CHECK(resp.id == 42u);
    CHECK(resp.error.has_value());
    CHECK_FALSE(wire::read_frame(fd, std::chrono::seconds(5)).has_value());
    ::close(fd);

    // oversized length prefix
    const int fd2 = dial(server.port());
    const unsigned char huge[4] = {0xff, 0xff, 0xff, 0xff};
    REQUIRE(::write(fd2, huge, 4) == 4);
    const auto reply2 = wire::read_frame(fd2, std::chrono::seconds(5));
    REQUIRE(reply2.has_value());
    CHECK(wire::decode_response(*reply2).error.has_value());
    ::close(fd2);
    CHECK(server.stats().protocol_errors == 2u);
    server.stop();
  }

  TEST_CASE("server-side errors are not retried") {
    const auto oracle = OracleSpec::from_seed(RewardKind::Linear, 4, 1, LabelMode::Deterministic);
    OracleServer server(oracle, {});
    server.start();
    RemoteOracle client("127.0.0.1", server.port(), LabelMode::Deterministic);
    RngStream r(8);
    CHECK_THROWS_AS(client.call(random_request(r, 1, 5)), wire::ProtocolError);
    server.stop();
  }

  TEST_CASE("server down: error after retries") {
    std::uint16_t port = 0;
    {
      const auto oracle = OracleSpec::from_seed(RewardKind::Linear, 4, 1, LabelMode::Deterministic);
      OracleServer server(oracle, {});
      server.start();
      port = server.port();
      server.stop();
    }
    RemoteOracle client("127.0.0.1", port, LabelMode::Deterministic,
                        ClientOptions{std::chrono::milliseconds(200), 3, std::chrono::milliseconds(1)});
    const FeatureMap fm({});
    RngStream r(9);
    const ContextFeatures cf = fm.apply_all(fm.sample_context(r));
    try {
      remote_label(client, cf.context, cf.response(0), cf.response(1), r);
      FAIL("expected OracleUnavailable");
    } catch (const OracleUnavailable& e) {
      CHECK(std::string(e.what()).find("3 retries") != std::string::npos);
    }
    CHECK(client.queries() == 0u);
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults and resolution") {
    const ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    const ExperimentConfig r = c.resolved();
    CHECK(r.beta == doctest::Approx(0.1));
    CHECK(r.retry_cap == 40u);
    CHECK(r.max_rounds == 4 * 5000u + 1000u);
    CHECK(r.resolved() == r);
    ExperimentConfig ipo;
    ipo.optimizer = DapKind::IPO;
    CHECK(ipo.resolved().beta == doctest::Approx(0.2));
  }

  TEST_CASE("json round trip and keys") {
    ExperimentConfig c;
    set_field(c, "agent", "passive-online");
    set_field(c, "optimizer", "slic");
    set_field(c, "lambda", "0.25");
    set_field(c, "oracle", "tcp://localhost:9000");
    set_field(c, "mode", "bernoulli");
    const ExperimentConfig back = config_from_json(to_json(c));
    CHECK(back == c.resolved());
    CHECK(back.agent == AgentKind::PassiveOnline);
    CHECK(back.lambda == 0.25);
    const auto keys = config_keys();
    const auto j = to_json(c);
    REQUIRE(keys.size() == j.size());
    std::size_t i = 0;
    for (const auto& [k, v] : j.items()) CHECK(k == keys[i++]);
  }

  TEST_CASE("bad values name the key") {
    ExperimentConfig c;
    CHECK_THROWS_WITH_AS(set_field(c, "nonsense", "1"), doctest::Contains("nonsense"), ConfigError);
    CHECK_THROWS_WITH_AS(set_field(c, "budget", "-3"), doctest::Contains("budget"), ConfigError);
    CHECK_THROWS_WITH_AS(set_field(c, "agent", "sea"), doctest::Contains("agent"), ConfigError);
    CHECK_THROWS_WITH_AS(set_field(c, "lambda", "1.5x"), doctest::Contains("lambda"), ConfigError);
    c.gamma = 1.5;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("gamma"), ConfigError);
    ExperimentConfig d;
    d.oracle = "tcp://nowhere";
    CHECK_THROWS_AS(d.validate(), ConfigError);
  }

  TEST_CASE("config text") {
    ExperimentConfig c;
    std::istringstream ok("# sweep defaults\nbudget = 30\n\n  agent=sea-ee   # trailing\noracle = \"tcp://h:5\"\n");
    apply_config_text(c, ok);
    CHECK(c.budget == 30u);
    CHECK(c.agent == AgentKind::SeaEe);
    CHECK(c.oracle == "tcp://h:5");
    std::istringstream unknown("budget = 1\nbudgit = 2\n");
    CHECK_THROWS_WITH_AS(apply_config_text(c, unknown), doctest::Contains("line 2"), ConfigError);
    std::istringstream no_eq("budget 3\n");
    CHECK_THROWS_AS(apply_config_text(c, no_eq), ConfigError);
  }

  TEST_CASE("tcp addresses") {
    CHECK(parse_tcp_address("tcp://127.0.0.1:7878") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 7878});
    CHECK(parse_tcp_address("localhost:1") == std::pair<std::string, std::uint16_t>{"localhost", 1});
    CHECK_THROWS_AS(parse_tcp_address("tcp://host:0"), ConfigError);
    CHECK(parse_tcp_address("127.0.0.1:0", true).second == 0);
    CHECK_THROWS_AS(parse_tcp_address("tcp://host:70000"), ConfigError);
    CHECK_THROWS_AS(parse_tcp_address(":80"), ConfigError);
  }

  TEST_CASE("hash tracks content") {
    ExperimentConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
  }
}

TEST_SUITE("run log") {
  TEST_CASE("csv header is the exact column list") {
    CHECK(csv_header() ==
          "round,oracle_queries,online_win_rate,offline_win_rate,cumulative_regret,immediate_regret,"
          "proposal_set_size,pair_variance,label_source");
  }

  TEST_CASE("format_double round trips") {
    RngStream r(10);
    for (int i = 0; i < 200; ++i) {
      const double v = r.normal() * std::pow(10.0, static_cast<double>(r.uniform_index(40)) - 20.0);
      CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
  }

  TEST_CASE("run directory round trip and crash-safe prefix") {
    TempDir tmp;
    const ExperimentConfig cfg = small_config();
    RunOptions opts;
    opts.out_dir = tmp.path;
    const RunLog log = run_experiment(cfg, opts);
    const RunLog back = read_run(tmp.path);
    CHECK(back.header == log.header);
    CHECK(back.rows == log.rows);
    REQUIRE(back.records.size() == log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i) CHECK(back.records[i] == log.records[i]);
    CHECK(back.records.size() + 1 == back.rows.size());
    CHECK(slurp(tmp.path / "log.csv") == log.csv());
    CHECK(slurp(tmp.path / "records.jsonl") == log.jsonl());
    CHECK(log.header["schema_version"] == kSchemaVersion);
    CHECK(config_from_json(log.header["config"]) == cfg.resolved());

    // rows strictly ordered, queries non-decreasing, budget met exactly
    for (std::size_t i = 1; i < log.rows.size(); ++i) {
      CHECK(log.rows[i].round == log.rows[i - 1].round + 1);
      CHECK(log.rows[i].oracle_queries >= log.rows[i - 1].oracle_queries);
      CHECK(log.rows[i].cumulative_regret >= log.rows[i - 1].cumulative_regret);
    }
    CHECK(log.rows.back().oracle_queries == cfg.budget);
    CHECK(log.rows.back().offline_win_rate.has_value());

    // a truncated csv still parses up to the cut
    const std::string csv = slurp(tmp.path / "log.csv");
    std::size_t cut = 0;
    for (int lines = 0; lines < 11; ++lines) cut = csv.find('\n', cut) + 1;
    std::istringstream prefix(csv.substr(0, cut));
    const auto rows = read_csv(prefix);
    CHECK(rows.size() == 10u);
    CHECK(std::equal(rows.begin(), rows.end(), log.rows.begin()));
  }

  TEST_CASE("schema mismatch names both versions") {
    TempDir tmp;
    RunOptions opts;
    opts.out_dir = tmp.path;
    ExperimentConfig cfg = small_config();
    cfg.budget = 5;
    run_experiment(cfg, opts);
    auto header = nlohmann::ordered_json::parse(slurp(tmp.path / "header.json"));
    header["schema_version"] = 99;
    std::ofstream(tmp.path / "header.json") << header.dump();
    CHECK_THROWS_WITH_AS(read_run(tmp.path), doctest::Contains("expected 1, found 99"), InputError);
  }

  TEST_CASE("bad csv") {
    std::istringstream wrong_header("round,queries\n");
    CHECK_THROWS_AS(read_csv(wrong_header), InputError);
    std::istringstream bad_line(csv_header() + "\n1,2,x,,0,0,5,,oracle\n");
    CHECK_THROWS_AS(read_csv(bad_line), InputError);
  }
}

TEST_SUITE("checkpoints") {
  TEST_CASE("bit-exact round trip") {
    TempDir tmp;
    RunArtifacts art;
    RunOptions opts;
    opts.out_dir = tmp.path;
    opts.artifacts = &art;
    const ExperimentConfig cfg = small_config();
    run_experiment(cfg, opts);
    const PolicyCheckpoint pc = policy_checkpoint_from_json(load_json(tmp.path / "policy.json"));
    CHECK(pc.policy == art.policy);
    CHECK(pc.config == cfg.resolved());
    const ErmCheckpoint ec = erm_checkpoint_from_json(load_json(tmp.path / "erm.json"));
    REQUIRE(art.erm.has_value());
    CHECK(ec.model == *art.erm);
    const Environment env(cfg.resolved());
    CHECK(pc.feature_map_digest == env.fm.digest());
    CHECK(offline_win_rate(pc.policy, env.suite, env.oracle) == offline_win_rate(art.policy, env.suite, env.oracle));
  }

  TEST_CASE("tampered config or kind is refused") {
    TempDir tmp;
    RunOptions opts;
    opts.out_dir = tmp.path;
    ExperimentConfig cfg = small_config();
    cfg.budget = 5;
    run_experiment(cfg, opts);
    auto j = load_json(tmp.path / "policy.json");
    CHECK_THROWS_AS(erm_checkpoint_from_json(j), InputError);
    j["config"]["seed"] = 77;
    CHECK_THROWS_AS(policy_checkpoint_from_json(j), InputError);
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("zero budget gives an eval-only log") {
    ExperimentConfig cfg = small_config();
    cfg.budget = 0;
    const RunLog log = run_experiment(cfg);
    REQUIRE(log.rows.size() == 1u);
    CHECK(log.records.empty());
    CHECK(log.rows[0].label_source == "none");
    // uniform reference against uniform-sampled references
    CHECK(std::abs(*log.rows[0].offline_win_rate - 0.5) < 0.2);
  }

  TEST_CASE("same config and seed: identical logs") {
    for (auto agent : {AgentKind::SeaBai, AgentKind::SeaEe, AgentKind::PassiveOnline, AgentKind::Offline}) {
      ExperimentConfig cfg = small_config();
      cfg.agent = agent;
      CHECK(run_experiment(cfg).csv() == run_experiment(cfg).csv());
      CHECK(run_experiment(cfg).jsonl() == run_experiment(cfg).jsonl());
    }
  }

  TEST_CASE("budget accounting with mixing") {
    // rounds ~ Q / gamma; the spread of a negative binomial with Q=1000, gamma=0.7 is about 25
    ExperimentConfig cfg;
    cfg.budget = 1000;
    cfg.burn_in = 0;
    cfg.eval_every = 100000;
    cfg.eval_contexts = 16;
    double mean_rounds = 0.0;
    for (std::uint64_t s = 1; s <= 3; ++s) {
      cfg.seed = s;
      const RunLog log = run_experiment(cfg);
      CHECK(log.rows.back().oracle_queries == 1000u);
      mean_rounds += static_cast<double>(log.records.size()) / 3.0;
      std::size_t synthetic = 0;
      for (const auto& r : log.records) synthetic += r.source == LabelSource::SyntheticLabel ? 1 : 0;
      CHECK(log.records.size() - synthetic == 1000u);
    }
    CHECK(std::abs(mean_rounds - 1000.0 / 0.7) < 60.0);
  }

  TEST_CASE("remote and in-process runs produce identical logs") {
    ExperimentConfig cfg = small_config();
    cfg.label_mode = LabelMode::Bernoulli;
    const Environment env(cfg.resolved());
    OracleServer server(env.oracle, {});
    server.start();
    ExperimentConfig remote = cfg;
    remote.oracle = "tcp://127.0.0.1:" + std::to_string(server.port());
    RunOptions opts;
    opts.environment = &env;
    const RunLog a = run_experiment(cfg, opts);
    const RunLog b = run_experiment(remote, opts);
    server.stop();
    CHECK(a.csv() == b.csv());
    CHECK(a.jsonl() == b.jsonl());
  }

  TEST_CASE("mismatched environment is refused") {
    ExperimentConfig cfg = small_config();
    const Environment env(cfg.resolved());
    cfg.env_seed = 5;
    RunOptions opts;
    opts.environment = &env;
    CHECK_THROWS_AS(run_experiment(cfg, opts), ConfigError);
  }

  TEST_CASE("unreachable remote oracle") {
    ExperimentConfig cfg = small_config();
    cfg.oracle = "tcp://127.0.0.1:1";
    CHECK_THROWS_AS(run_experiment(cfg), OracleUnavailable);
  }

  TEST_CASE("sweep writes one directory per seed") {
    TempDir tmp;
    ExperimentConfig cfg = small_config();
    cfg.budget = 20;
    cfg.seed = 4;
    const auto logs = run_sweep(cfg, 2, tmp.path);
    REQUIRE(logs.size() == 2u);
    cfg.seed = 5;
    CHECK(logs[1].csv() == run_experiment(cfg).csv());
    std::size_t dirs = 0;
    for (const auto& e : fs::directory_iterator(tmp.path)) dirs += e.is_directory() ? 1 : 0;
    CHECK(dirs == 2u);
  }
}
