// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/oracle_client.hpp"

#include <cerrno>
#include <cstring>
#include <thread>

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <fcntl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "duel/core/errors.hpp"

namespace duel::harness {

RemoteOracle::RemoteOracle(std::string host, std::uint16_t port, LabelMode mode, ClientOptions opts)
    : host_(std::move(host)), port_(port), mode_(mode), opts_(opts) {}

RemoteOracle::~RemoteOracle() { disconnect(); }

void RemoteOracle::disconnect() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void RemoteOracle::connect() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (int rc = ::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw wire::TransportError("resolve " + host_ + ": " + ::gai_strerror(rc));
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw wire::TransportError(std::string("socket: ") + std::strerror(errno));
  }
  // Non-blocking connect so the timeout also covers the handshake.
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(opts_.timeout.count()));
    int err = 0;
    socklen_t len = sizeof(err);
    if (rc == 1) ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc == 1 && err == 0) {
      rc = 0;
    } else {
      errno = rc == 0 ? ETIMEDOUT : err;
      rc = -1;
    }
  }
  if (rc < 0) {
    const std::string msg = std::strerror(errno);
    ::close(fd);
    throw wire::TransportError("connect " + host_ + ":" + port + ": " + msg);
  }
  ::fcntl(fd, F_SETFL, flags);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
}

wire::Response RemoteOracle::call(const wire::Request& req) {
  const std::string body = wire::encode_request(req);
  std::string last_error;
  for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("oracle request {} failed ({}); retry {}/{}", req.id, last_error, attempt, opts_.retries);
      std::this_thread::sleep_for(opts_.backoff * attempt);
    }
    try {
      if (fd_ < 0) connect();
      wire::write_frame(fd_, body, opts_.timeout);
      auto reply = wire::read_frame(fd_, opts_.timeout);
      if (!reply) throw wire::TransportError("connection closed by oracle service");
      wire::Response resp = wire::decode_response(*reply);
      if (resp.error) {
        disconnect();
        throw wire::ProtocolError("oracle service error: " + *resp.error);
      }
      if (resp.id != req.id) throw wire::ProtocolError("response id mismatch");
      if (resp.winners.size() != req.pairs.size()) throw wire::ProtocolError("response size mismatch");
      return resp;
    } catch (const wire::TransportError& e) {
      disconnect();
      last_error = e.what();
    }
  }
  throw OracleUnavailable("oracle service at " + host_ + ":" + std::to_string(port_) + " unreachable after " +
                          std::to_string(opts_.retries) + " retries: " + last_error);
}

PreferenceTriplet RemoteOracle::label_pair(const ContextVec& x, const ResponseRef& y, const ResponseRef& yp,
                                           RngStream& rng, std::int64_t round) {
  if (y.action_id == yp.action_id) throw InputError("label_pair: responses must differ");
  const std::uint64_t seed = rng.next_u64();
  const ResponseRef& lo = y.action_id < yp.action_id ? y : yp;
  const ResponseRef& hi = y.action_id < yp.action_id ? yp : y;
  wire::Request req;
  req.id = next_id();
  req.mode = mode_;
  req.seed = seed;
  req.pairs.push_back(wire::WirePair{x.values, lo.features, hi.features});
  const wire::Response resp = call(req);
  ++queries_;
  const bool lo_wins = resp.winners.front() == 0;
  PreferenceTriplet t;
  t.context = x;
  t.winner = lo_wins ? lo : hi;
  t.loser = lo_wins ? hi : lo;
  t.source = LabelSource::OracleLabel;
  t.round = round;
  return t;
}

}  // namespace duel::harness
