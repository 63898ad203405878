// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/wire.hpp"

#include <cerrno>
#include <cstring>

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "duel/core/errors.hpp"

namespace duel::harness::wire {

using nlohmann::json;

std::string encode_request(const Request& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) pairs.push_back({{"ctx", p.ctx}, {"fy", p.fy}, {"fyp", p.fyp}});
  json j = {{"id", r.id}, {"pairs", std::move(pairs)}, {"mode", std::string(to_string(r.mode))}, {"seed", r.seed}};
  return j.dump();
}

Request decode_request(const std::string& body) {
  try {
    const json j = json::parse(body);
    Request r;
    r.id = j.at("id").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mode = parse_label_mode(j.at("mode").get<std::string>());
    for (const auto& p : j.at("pairs")) {
      WirePair w{p.at("ctx").get<Vec>(), p.at("fy").get<Vec>(), p.at("fyp").get<Vec>()};
      if (w.fy.size() != w.fyp.size()) throw ProtocolError("pair feature lengths differ");
      r.pairs.push_back(std::move(w));
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  } catch (const InputError& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
}

std::string encode_response(const Response& r) {
  json j = {{"id", r.id}};
  if (r.error) {
    j["error"] = *r.error;
  } else {
    j["winners"] = r.winners;
    j["probs"] = r.probs;
  }
  return j.dump();
}

Response decode_response(const std::string& body) {
  try {
    const json j = json::parse(body);
    Response r;
    r.id = j.at("id").get<std::uint64_t>();
    if (j.contains("error")) {
      r.error = j.at("error").get<std::string>();
      return r;
    }
    r.winners = j.at("winners").get<std::vector<int>>();
    r.probs = j.at("probs").get<std::vector<double>>();
    for (int w : r.winners) {
      if (w != 0 && w != 1) throw ProtocolError("winner must be 0 or 1");
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

std::string frame(const std::string& body) {
  if (body.size() > kMaxFrameBytes) throw ProtocolError("frame too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

std::uint32_t frame_length(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

namespace {

void wait_ready(int fd, short events, std::chrono::milliseconds timeout) {
  if (timeout.count() <= 0) return;
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return;
    if (rc == 0) throw TransportError("socket timeout");
    if (errno != EINTR) throw TransportError(std::string("poll: ") + std::strerror(errno));
  }
}

// Returns bytes read; short only when the peer closed.
std::size_t read_exact(int fd, char* buf, std::size_t n, std::chrono::milliseconds timeout) {
  std::size_t got = 0;
  while (got < n) {
    wait_ready(fd, POLLIN, timeout);
    const ssize_t rc = ::recv(fd, buf + got, n - got, 0);
    if (rc == 0) return got;
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(rc);
  }
  return got;
}

}  // namespace

void write_frame(int fd, const std::string& body, std::chrono::milliseconds timeout) {
  const std::string data = frame(body);
  std::size_t sent = 0;
  while (sent < data.size()) {
    wait_ready(fd, POLLOUT, timeout);
    const ssize_t rc = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(rc);
  }
}

std::optional<std::string> read_frame(int fd, std::chrono::milliseconds timeout) {
  unsigned char prefix[4];
  const std::size_t got = read_exact(fd, reinterpret_cast<char*>(prefix), 4, timeout);
  if (got == 0) return std::nullopt;
  if (got < 4) throw TransportError("connection closed inside a frame prefix");
  const std::uint32_t n = frame_length(prefix);
  if (n > kMaxFrameBytes) throw ProtocolError("frame length " + std::to_string(n) + " exceeds limit");
  std::string body(n, '\0');
  if (read_exact(fd, body.data(), n, timeout) < n) throw TransportError("connection closed inside a frame body");
  return body;
}

Response answer(const OracleSpec& oracle, const Request& req) {
  Response resp;
  resp.id = req.id;
  resp.winners.reserve(req.pairs.size());
  resp.probs.reserve(req.pairs.size());
  try {
    for (std::size_t i = 0; i < req.pairs.size(); ++i) {
      double prob = 0.0;
      const bool first = oracle.first_wins(req.pairs[i].fy, req.pairs[i].fyp, req.mode, req.seed, i, &prob);
      resp.winners.push_back(first ? 0 : 1);
      resp.probs.push_back(prob);
    }
  } catch (const std::exception& e) {
    resp.winners.clear();
    resp.probs.clear();
    resp.error = e.what();
  }
  return resp;
}

}  // namespace duel::harness::wire
