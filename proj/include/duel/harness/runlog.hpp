// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "duel/agent.hpp"
#include "duel/metrics.hpp"

namespace duel::harness {

inline constexpr int kSchemaVersion = 1;

inline constexpr std::array<std::string_view, 9> kCsvColumns = {
    "round",          "oracle_queries",    "online_win_rate",
    "offline_win_rate", "cumulative_regret", "immediate_regret",
    "proposal_set_size", "pair_variance",   "label_source"};

/// One CSV line. Round 0 is the evaluation of the initial policy: it has no
/// duel, so the duel columns are blank and label_source is "none".
struct LogRow {
  std::int64_t round = 0;
  std::uint64_t oracle_queries = 0;
  std::optional<double> online_win_rate;
  std::optional<double> offline_win_rate;
  double cumulative_regret = 0.0;
  double immediate_regret = 0.0;
  std::size_t proposal_set_size = 0;
  std::optional<double> pair_variance;
  std::string label_source = "none";

  bool operator==(const LogRow&) const = default;
};

LogRow project(const DuelRecord& r);
LogRow initial_row(double offline_win_rate);

/// Everything one run produced.
struct RunLog {
  nlohmann::ordered_json header;
  std::vector<LogRow> rows;          // round 0 first
  std::vector<DuelRecord> records;   // one per round >= 1

  std::vector<EvalPoint> evals() const;
  std::string csv() const;
  std::string jsonl() const;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string csv_header();
std::string csv_line(const LogRow& r);
/// Throws InputError when the header is not the exact column list or a line is malformed.
std::vector<LogRow> read_csv(std::istream& in);

nlohmann::ordered_json record_to_json(const DuelRecord& r);
DuelRecord record_from_json(const nlohmann::json& j);
std::vector<DuelRecord> read_jsonl(std::istream& in);

/// Header for a run directory: schema version, resolved config, code version.
nlohmann::ordered_json make_header(const nlohmann::ordered_json& config);
std::string code_version();

/// Streams a run into DIR/{header.json, log.csv, records.jsonl}. Files are
/// flushed at every evaluation so an interrupted run leaves a readable prefix.
class RunLogWriter {
 public:
  RunLogWriter(const std::filesystem::path& dir, const nlohmann::ordered_json& header);
  void append(const LogRow& row, const DuelRecord* record);
  void flush();

 private:
  std::ofstream csv_;
  std::ofstream jsonl_;
};

/// Reads a run directory. A schema_version other than kSchemaVersion raises
/// InputError naming both versions.
RunLog read_run(const std::filesystem::path& dir);

}  // namespace duel::harness
