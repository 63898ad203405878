// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/runlog.hpp"

#include <charconv>
#include <istream>
#include <sstream>

#include "duel/core/errors.hpp"

#ifndef DUEL_GIT_HASH
#define DUEL_GIT_HASH "unknown"
#endif

namespace duel::harness {

LogRow project(const DuelRecord& r) {
  LogRow row;
  row.round = r.round;
  row.oracle_queries = r.oracle_queries;
  row.online_win_rate = r.online_win_rate;
  row.offline_win_rate = r.offline_win_rate;
  row.cumulative_regret = r.cumulative_regret;
  row.immediate_regret = r.immediate_regret;
  row.proposal_set_size = r.proposal_set_size;
  row.pair_variance = r.pair_variance;
  row.label_source = std::string(to_string(r.source));
  return row;
}

LogRow initial_row(double offline_win_rate) {
  LogRow row;
  row.offline_win_rate = offline_win_rate;
  return row;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw StateError("format_double failed");
  return std::string(buf, ptr);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

template <class T>
T parse_field(std::string_view s, std::size_t line) {
  T out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw InputError("csv line " + std::to_string(line) + ": bad value '" + std::string(s) + "'");
  return out;
}

std::optional<double> parse_opt(std::string_view s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return parse_field<double>(s, line);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string csv_header() {
  std::string h;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) h += ',';
    h += kCsvColumns[i];
  }
  return h;
}

std::string csv_line(const LogRow& r) {
  std::string s;
  s += std::to_string(r.round) + ',';
  s += std::to_string(r.oracle_queries) + ',';
  s += opt(r.online_win_rate) + ',';
  s += opt(r.offline_win_rate) + ',';
  s += format_double(r.cumulative_regret) + ',';
  s += format_double(r.immediate_regret) + ',';
  s += std::to_string(r.proposal_set_size) + ',';
  s += opt(r.pair_variance) + ',';
  s += r.label_source;
  return s;
}

std::vector<LogRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: missing header");
  if (line != csv_header()) throw InputError("csv: unexpected header '" + line + "'");
  std::vector<LogRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != kCsvColumns.size())
      throw InputError("csv line " + std::to_string(n) + ": expected " + std::to_string(kCsvColumns.size()) +
                       " fields, found " + std::to_string(f.size()));
    LogRow r;
    r.round = parse_field<std::int64_t>(f[0], n);
    r.oracle_queries = parse_field<std::uint64_t>(f[1], n);
    r.online_win_rate = parse_opt(f[2], n);
    r.offline_win_rate = parse_opt(f[3], n);
    r.cumulative_regret = parse_field<double>(f[4], n);
    r.immediate_regret = parse_field<double>(f[5], n);
    r.proposal_set_size = parse_field<std::size_t>(f[6], n);
    r.pair_variance = parse_opt(f[7], n);
    r.label_source = std::string(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::ordered_json record_to_json(const DuelRecord& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["context"] = r.context.values;
  j["first"] = r.first;
  j["second"] = r.second;
  j["winner"] = r.winner;
  j["loser"] = r.loser;
  j["source"] = std::string(to_string(r.source));
  j["proposal_set_size"] = r.proposal_set_size;
  j["pair_variance"] = r.pair_variance;
  j["fallback"] = r.fallback;
  j["oracle_queries"] = r.oracle_queries;
  j["reference"] = r.reference;
  j["judge_first"] = static_cast<int>(r.judge_first);
  j["judge_second"] = static_cast<int>(r.judge_second);
  j["immediate_regret"] = r.immediate_regret;
  j["cumulative_regret"] = r.cumulative_regret;
  j["online_win_rate"] = r.online_win_rate;
  j["offline_win_rate"] = r.offline_win_rate ? nlohmann::ordered_json(*r.offline_win_rate) : nlohmann::ordered_json(nullptr);
  return j;
}

DuelRecord record_from_json(const nlohmann::json& j) {
  DuelRecord r;
  r.round = j.at("round").get<std::int64_t>();
  r.context.values = j.at("context").get<Vec>();
  r.first = j.at("first").get<int>();
  r.second = j.at("second").get<int>();
  r.winner = j.at("winner").get<int>();
  r.loser = j.at("loser").get<int>();
  const auto src = j.at("source").get<std::string>();
  if (src == "oracle") r.source = LabelSource::OracleLabel;
  else if (src == "synthetic") r.source = LabelSource::SyntheticLabel;
  else throw InputError("record: unknown label source '" + src + "'");
  r.proposal_set_size = j.at("proposal_set_size").get<std::size_t>();
  r.pair_variance = j.at("pair_variance").get<double>();
  r.fallback = j.at("fallback").get<bool>();
  r.oracle_queries = j.at("oracle_queries").get<std::uint64_t>();
  r.reference = j.at("reference").get<int>();
  r.judge_first = static_cast<Judgement>(j.at("judge_first").get<int>());
  r.judge_second = static_cast<Judgement>(j.at("judge_second").get<int>());
  r.immediate_regret = j.at("immediate_regret").get<double>();
  r.cumulative_regret = j.at("cumulative_regret").get<double>();
  r.online_win_rate = j.at("online_win_rate").get<double>();
  if (!j.at("offline_win_rate").is_null()) r.offline_win_rate = j.at("offline_win_rate").get<double>();
  return r;
}

std::vector<DuelRecord> read_jsonl(std::istream& in) {
  std::vector<DuelRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("jsonl line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalPoint> RunLog::evals() const {
  std::vector<EvalPoint> out;
  for (const auto& r : rows) {
    if (r.offline_win_rate) out.push_back(EvalPoint{r.round, r.oracle_queries, *r.offline_win_rate});
  }
  return out;
}

std::string RunLog::csv() const {
  std::string s = csv_header() + '\n';
  for (const auto& r : rows) s += csv_line(r) + '\n';
  return s;
}

std::string RunLog::jsonl() const {
  std::string s;
  for (const auto& r : records) s += record_to_json(r).dump() + '\n';
  return s;
}

std::string code_version() { return DUEL_GIT_HASH; }

nlohmann::ordered_json make_header(const nlohmann::ordered_json& config) {
  nlohmann::ordered_json h;
  h["schema_version"] = kSchemaVersion;
  h["code_version"] = code_version();
  h["config"] = config;
  return h;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& dir, const nlohmann::ordered_json& header) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream h(dir / "header.json");
    if (!h) throw StateError("cannot write " + (dir / "header.json").string());
    h << header.dump(2) << '\n';
  }
  csv_.open(dir / "log.csv");
  jsonl_.open(dir / "records.jsonl");
  if (!csv_ || !jsonl_) throw StateError("cannot open log files in " + dir.string());
  csv_ << csv_header() << '\n';
}

void RunLogWriter::append(const LogRow& row, const DuelRecord* record) {
  csv_ << csv_line(row) << '\n';
  if (record) jsonl_ << record_to_json(*record).dump() << '\n';
  if (row.offline_win_rate) flush();
}

void RunLogWriter::flush() {
  csv_.flush();
  jsonl_.flush();
}

RunLog read_run(const std::filesystem::path& dir) {
  RunLog log;
  std::ifstream h(dir / "header.json");
  if (!h) throw InputError("missing " + (dir / "header.json").string());
  try {
    log.header = nlohmann::ordered_json::parse(h);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("header.json: ") + e.what());
  }
  const int found = log.header.value("schema_version", -1);
  if (found != kSchemaVersion)
    throw InputError("log schema version mismatch: expected " + std::to_string(kSchemaVersion) + ", found " +
                     std::to_string(found));
  std::ifstream csv(dir / "log.csv");
  if (!csv) throw InputError("missing " + (dir / "log.csv").string());
  log.rows = read_csv(csv);
  std::ifstream jl(dir / "records.jsonl");
  if (jl) log.records = read_jsonl(jl);
  return log;
}

}  // namespace duel::harness
