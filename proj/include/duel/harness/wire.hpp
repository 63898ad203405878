// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "duel/core/types.hpp"
#include "duel/oracle.hpp"

/// Oracle wire protocol: every message is a 4-byte big-endian length followed
/// by that many bytes of UTF-8 JSON.
///
///   request  {"id": u64, "pairs": [{"ctx": [..], "fy": [..], "fyp": [..]}],
///             "mode": "bernoulli"|"deterministic", "seed": u64}
///   response {"id": u64, "winners": [0|1], "probs": [..]}
///          | {"id": u64, "error": "..."}
///
/// winners[i] = 0 means pair i's fy won. Pair i of a request is labeled with
/// pair_draw(seed, i).
namespace duel::harness::wire {

inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Socket-level failure: peer closed, timeout, refused.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WirePair {
  Vec ctx;
  Vec fy;
  Vec fyp;
  bool operator==(const WirePair&) const = default;
};

struct Request {
  std::uint64_t id = 0;
  std::vector<WirePair> pairs;
  LabelMode mode = LabelMode::Deterministic;
  std::uint64_t seed = 0;
  bool operator==(const Request&) const = default;
};

struct Response {
  std::uint64_t id = 0;
  std::vector<int> winners;
  std::vector<double> probs;
  std::optional<std::string> error;
  bool operator==(const Response&) const = default;
};

std::string encode_request(const Request& r);
/// Throws ProtocolError on malformed JSON or schema violations.
Request decode_request(const std::string& body);
std::string encode_response(const Response& r);
Response decode_response(const std::string& body);

/// Length prefix + body.
std::string frame(const std::string& body);
/// Parses the 4-byte prefix.
std::uint32_t frame_length(const unsigned char* prefix);

/// Blocking frame IO on a connected socket. A zero timeout waits forever.
/// read_frame returns nullopt on a clean close before any prefix byte.
void write_frame(int fd, const std::string& body, std::chrono::milliseconds timeout = {});
std::optional<std::string> read_frame(int fd, std::chrono::milliseconds timeout = {});

/// Answers one request against an oracle.
Response answer(const OracleSpec& oracle, const Request& req);

}  // namespace duel::harness::wire
