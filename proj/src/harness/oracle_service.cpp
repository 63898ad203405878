// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/oracle_service.hpp"

#include <cerrno>
#include <cstring>
#include <vector>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace duel::harness {

struct OracleServer::Connection {
  int fd = -1;
  std::mutex write_mu;
  std::atomic<bool> open{true};

  void close_once() {
    if (open.exchange(false)) ::shutdown(fd, SHUT_RDWR);
  }
  ~Connection() {
    if (fd >= 0) ::close(fd);
  }
};

OracleServer::OracleServer(const OracleSpec& oracle, ServerOptions opts) : oracle_(oracle), opts_(std::move(opts)) {
  if (opts_.max_batch == 0) opts_.max_batch = 1;
}

OracleServer::~OracleServer() { stop(); }

void OracleServer::start() {
  if (running_) return;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(opts_.port);
  if (int rc = ::getaddrinfo(opts_.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw wire::TransportError("resolve " + opts_.host + ": " + ::gai_strerror(rc));
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  const bool ok = listen_fd_ >= 0 && ::bind(listen_fd_, res->ai_addr, res->ai_addrlen) == 0 &&
                  ::listen(listen_fd_, 128) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    const std::string err = std::strerror(errno);
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
    throw wire::TransportError("bind " + opts_.host + ":" + port + ": " + err);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  running_ = true;
  consumer_ = std::thread([this] { consumer_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("oracle service listening on {}:{} (max_batch={}, max_delay={}ms)", opts_.host, port_,
               opts_.max_batch, opts_.max_delay.count());
}

void OracleServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lk(conn_mu_);
    for (auto& c : connections_) c->close_once();
  }
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
  readers_.clear();
  queue_cv_.notify_all();
  if (consumer_.joinable()) consumer_.join();
  std::lock_guard lk(conn_mu_);
  connections_.clear();
}

ServerStats OracleServer::stats() const {
  std::lock_guard lk(stats_mu_);
  return stats_;
}

void OracleServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listening socket closed
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    std::lock_guard lk(conn_mu_);
    if (!running_) {
      conn->close_once();
      break;
    }
    connections_.push_back(conn);
    readers_.emplace_back([this, conn] { reader_loop(conn); });
  }
}

void OracleServer::reader_loop(std::shared_ptr<Connection> conn) {
  while (running_ && conn->open) {
    std::optional<std::string> body;
    try {
      body = wire::read_frame(conn->fd);
    } catch (const wire::ProtocolError& e) {
      count_protocol_error();
      send_response(*conn, wire::Response{0, {}, {}, std::string(e.what())});
      conn->close_once();
      return;
    } catch (const wire::TransportError&) {
      conn->close_once();
      return;
    }
    if (!body) {
      conn->close_once();
      return;
    }
    wire::Request req;
    try {
      req = wire::decode_request(*body);
    } catch (const wire::ProtocolError& e) {
      std::uint64_t id = 0;
      // Echo the id when the body is JSON carrying one.
      const auto j = nlohmann::json::parse(*body, nullptr, false);
      if (j.is_object() && j.contains("id") && j["id"].is_number_unsigned()) id = j["id"].get<std::uint64_t>();
      count_protocol_error();
      send_response(*conn, wire::Response{id, {}, {}, std::string(e.what())});
      conn->close_once();
      return;
    }
    {
      std::lock_guard lk(queue_mu_);
      queue_.push_back(Job{conn, std::move(req)});
    }
    queue_cv_.notify_one();
  }
}

void OracleServer::consumer_loop() {
  for (;;) {
    std::vector<Job> batch;
    {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait(lk, [this] { return !queue_.empty() || !running_; });
      if (queue_.empty()) return;  // stopped and drained
      const auto deadline = std::chrono::steady_clock::now() + opts_.max_delay;
      queue_cv_.wait_until(lk, deadline, [this] { return queue_.size() >= opts_.max_batch || !running_; });
      const std::size_t n = std::min(queue_.size(), opts_.max_batch);
      for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(std::move(queue_.front()));
        queue_.pop_front();
      }
    }
    std::uint64_t pairs = 0;
    std::vector<wire::Response> answers;
    answers.reserve(batch.size());
    for (auto& job : batch) {
      answers.push_back(wire::answer(oracle_, job.request));
      pairs += job.request.pairs.size();
    }
    {
      // counted before replying so a client that saw its answer also sees it in stats()
      std::lock_guard lk(stats_mu_);
      stats_.requests += batch.size();
      stats_.pairs += pairs;
      ++stats_.batches;
      stats_.largest_batch = std::max<std::uint64_t>(stats_.largest_batch, batch.size());
    }
    for (std::size_t i = 0; i < batch.size(); ++i) send_response(*batch[i].conn, answers[i]);
  }
}

void OracleServer::count_protocol_error() {
  std::lock_guard lk(stats_mu_);
  ++stats_.protocol_errors;
}

void OracleServer::send_response(Connection& conn, const wire::Response& resp) {
  if (!conn.open) return;
  std::lock_guard lk(conn.write_mu);
  try {
    wire::write_frame(conn.fd, wire::encode_response(resp), std::chrono::seconds(5));
  } catch (const std::exception& e) {
    spdlog::debug("dropping response {}: {}", resp.id, e.what());
    conn.close_once();
  }
}

}  // namespace duel::harness
