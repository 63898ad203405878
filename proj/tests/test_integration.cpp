// SPDX-License-Identifier: Apache-2.0
// End-to-end runs through the duelalign binary.
#include <doctest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "duel/harness/checkpoint.hpp"
#include "duel/harness/experiment.hpp"
#include "duel/harness/runlog.hpp"
#include "duel/simd/kernels.hpp"

using namespace duel;
using namespace duel::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> n{0};
    path = fs::temp_directory_path() / ("duel_integ_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI through the shell; returns the exit status, stdout goes to `out`.
int cli(const std::string& args, const fs::path& out = "/dev/null", const std::string& env = "") {
  const std::string cmd = env + " " DUELALIGN_BIN " " + args + " > " + out.string() + " 2>/dev/null";
  const int st = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

// Background child process with stdout on a pipe.
struct Child {
  pid_t pid = -1;
  FILE* out = nullptr;

  explicit Child(std::vector<std::string> args) {
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      std::vector<char*> argv;
      std::string bin = DUELALIGN_BIN;
      argv.push_back(bin.data());
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(bin.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    out = ::fdopen(fds[0], "r");
  }
  std::string line() {
    char buf[256] = {};
    return std::fgets(buf, sizeof buf, out) ? std::string(buf) : std::string();
  }
  int stop(int sig) {
    ::kill(pid, sig);
    int st = 0;
    ::waitpid(pid, &st, 0);
    std::fclose(out);
    return st;
  }
};

// Splits a CSV into discrete columns and numeric columns.
struct CsvCells {
  std::vector<std::string> discrete;
  std::vector<double> numeric;
};

CsvCells cells(const std::string& csv) {
  CsvCells c;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    for (int col = 0; std::getline(ls, cell, ','); ++col) {
      // round, oracle_queries, proposal_set_size, label_source; blanks are structural
      if (col == 0 || col == 1 || col == 6 || col == 8 || cell.empty())
        c.discrete.push_back(cell);
      else
        c.numeric.push_back(std::stod(cell));
    }
  }
  return c;
}

std::vector<double> offline_curve(const RunLog& log) {
  std::vector<double> out;
  for (const auto& e : log.evals()) out.push_back(e.offline_win_rate);
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("run prints the same csv as the library") {
    TempDir tmp;
    REQUIRE(cli("run --budget 60 --num-heads 4 --eval-contexts 32 --eval-every 16", tmp.path / "a.csv") == 0);
    ExperimentConfig cfg;
    cfg.budget = 60;
    cfg.num_heads = 4;
    cfg.eval_contexts = 32;
    cfg.eval_every = 16;
    CHECK(slurp(tmp.path / "a.csv") == run_experiment(cfg).csv());
  }

  TEST_CASE("exit codes") {
    CHECK(cli("run --budget 5 --eval-contexts 8") == 0);
    CHECK(cli("run --gamma 2") == 2);
    CHECK(cli("run --agent nope") == 2);
    CHECK(cli("run --no-such-flag 1") == 2);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("eval /no/such/policy.json") == 2);
    CHECK(cli("run --budget 5 --oracle tcp://127.0.0.1:1") == 3);
    CHECK(cli("info") == 0);
  }

  TEST_CASE("config file with flag overrides") {
    TempDir tmp;
    std::ofstream(tmp.path / "run.cfg") << "budget = 30\nseed = 3\nagent = sea-ee\neval-contexts = 16\n";
    const std::string out = (tmp.path / "out").string();
    REQUIRE(cli("run --config " + (tmp.path / "run.cfg").string() + " --seed 4 --out " + out) == 0);
    const RunLog log = read_run(out);
    const ExperimentConfig c = config_from_json(log.header["config"]);
    CHECK(c.budget == 30u);
    CHECK(c.seed == 4u);
    CHECK(c.agent == AgentKind::SeaEe);
    CHECK(log.rows.back().oracle_queries == 30u);

    std::ofstream(tmp.path / "bad.cfg") << "budgit = 30\n";
    CHECK(cli("run --config " + (tmp.path / "bad.cfg").string()) == 2);
  }

  TEST_CASE("eval recomputes the final offline win rate") {
    TempDir tmp;
    const std::string out = (tmp.path / "run").string();
    REQUIRE(cli("run --budget 80 --eval-contexts 64 --num-heads 4 --out " + out) == 0);
    REQUIRE(cli("eval " + out + "/policy.json --erm " + out + "/erm.json --bon 4", tmp.path / "eval.json") == 0);
    const auto j = load_json(tmp.path / "eval.json");
    const RunLog log = read_run(out);
    CHECK(j["offline_win_rate"].get<double>() == log.evals().back().offline_win_rate);
    const double bon = j["best_of_n_win_rate"].get<double>();
    CHECK(bon >= 0.0);
    CHECK(bon <= 1.0);
    CHECK(cli("eval " + out + "/policy.json --bon 4") == 1);
  }

  TEST_CASE("scalar and vector kernels give the same run") {
    if (!simd::isa_available(simd::Isa::Avx2) && !simd::isa_available(simd::Isa::Neon)) return;
    const std::string vec = simd::isa_available(simd::Isa::Avx2) ? "avx2" : "neon";
    TempDir tmp;
    const std::string args = "run --budget 300 --eval-every 50 --eval-contexts 64";
    REQUIRE(cli(args, tmp.path / "s.csv", "DUEL_ALIGN_SIMD=scalar") == 0);
    REQUIRE(cli(args, tmp.path / "v.csv", "DUEL_ALIGN_SIMD=" + vec) == 0);
    const CsvCells s = cells(slurp(tmp.path / "s.csv"));
    const CsvCells v = cells(slurp(tmp.path / "v.csv"));
    // summation order may move the last bits, never a decision
    CHECK(s.discrete == v.discrete);
    REQUIRE(s.numeric.size() == v.numeric.size());
    for (std::size_t i = 0; i < s.numeric.size(); ++i)
      CHECK(s.numeric[i] == doctest::Approx(v.numeric[i]).epsilon(1e-9).scale(1.0));
  }

  TEST_CASE("served oracle: identical logs over tcp") {
    TempDir tmp;
    Child server({"serve-oracle", "--addr", "127.0.0.1:0", "--mode", "bernoulli"});
    const std::string banner = server.line();
    const auto colon = banner.rfind(':');
    REQUIRE(colon != std::string::npos);
    const std::string port = banner.substr(colon + 1, banner.find_last_not_of("\r\n") - colon);
    const std::string args = "run --budget 100 --mode bernoulli --eval-contexts 32 --num-heads 4 --out ";
    REQUIRE(cli(args + (tmp.path / "tcp").string() + " --oracle tcp://127.0.0.1:" + port) == 0);
    REQUIRE(cli(args + (tmp.path / "inproc").string()) == 0);
    const int st = server.stop(SIGTERM);
    CHECK(WIFEXITED(st));
    CHECK(WEXITSTATUS(st) == 0);
    for (const char* f : {"log.csv", "records.jsonl"}) CHECK(slurp(tmp.path / "tcp" / f) == slurp(tmp.path / "inproc" / f));
    // checkpoints stamp the config, which names the endpoint; the parameters must agree
    auto policy = [&](const char* d) { return policy_checkpoint_from_json(load_json(tmp.path / d / "policy.json")); };
    auto erm = [&](const char* d) { return erm_checkpoint_from_json(load_json(tmp.path / d / "erm.json")); };
    CHECK(policy("tcp").policy == policy("inproc").policy);
    CHECK(erm("tcp").model == erm("inproc").model);
  }

  TEST_CASE("a killed run leaves a readable prefix") {
    TempDir tmp;
    const fs::path out = tmp.path / "run";
    Child run({"run", "--budget", "1000000", "--eval-every", "8", "--eval-contexts", "8", "--num-heads", "4",
               "--out", out.string()});
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
    while (std::chrono::steady_clock::now() < deadline) {
      std::error_code ec;
      if (fs::file_size(out / "log.csv", ec) > 4096 && !ec) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    run.stop(SIGKILL);
    std::ifstream csv(out / "log.csv");
    std::vector<LogRow> rows;
    REQUIRE_NOTHROW(rows = read_csv(csv));
    REQUIRE(rows.size() > 8u);
    CHECK(rows.front().round == 0);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].round == rows[i - 1].round + 1);
  }
}

TEST_SUITE("offline agent") {
  TEST_CASE("zero epochs keeps the reference policy") {
    ExperimentConfig cfg;
    cfg.agent = AgentKind::Offline;
    cfg.budget = 50;
    cfg.offline_epochs = 0;
    cfg.ref_sharpness = 1.0;
    cfg.ref_quality = 0.3;
    const Environment env(cfg.resolved());
    RunArtifacts art;
    RunOptions opts;
    opts.environment = &env;
    opts.artifacts = &art;
    const RunLog log = run_experiment(cfg, opts);
    CHECK(art.policy == env.reference);
    CHECK(log.records.empty());
    CHECK(log.evals().back().offline_win_rate == offline_win_rate(env.reference, env.suite, env.oracle));
  }

  TEST_CASE("win rate plateaus once the data is used up") {
    ExperimentConfig cfg;
    cfg.agent = AgentKind::Offline;
    cfg.budget = 300;
    cfg.offline_epochs = 10;
    cfg.eval_every = 300;  // one evaluation per epoch
    for (std::uint64_t s = 1; s <= 3; ++s) {
      cfg.seed = s;
      const auto curve = offline_curve(run_experiment(cfg));
      REQUIRE(curve.size() == 11u);
      const double first_epoch = curve[1] - curve[0];
      const double last_half = curve[10] - curve[5];
      CHECK(first_epoch > 0.1);
      CHECK(std::abs(last_half) < 0.5 * first_epoch);
      CHECK(std::abs(curve[10] - curve[9]) < 0.03);
    }
  }
}
