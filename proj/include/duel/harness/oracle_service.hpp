// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "duel/harness/wire.hpp"
#include "duel/oracle.hpp"

namespace duel::harness {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0: ephemeral
  std::size_t max_batch = 32;
  std::chrono::milliseconds max_delay{2};
};

struct ServerStats {
  std::uint64_t requests = 0;
  std::uint64_t pairs = 0;
  std::uint64_t batches = 0;
  std::uint64_t largest_batch = 0;
  std::uint64_t protocol_errors = 0;
};

/// Batched oracle service. One reader thread per connection decodes requests
/// into a shared queue; a single consumer drains it in batches of at most
/// max_batch requests, waiting at most max_delay after the first queued
/// request. Labels depend only on each request's (seed, pair index).
class OracleServer {
 public:
  OracleServer(const OracleSpec& oracle, ServerOptions opts);
  ~OracleServer();
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  /// Binds and starts serving. Throws wire::TransportError when the address is unusable.
  void start();
  void stop();
  /// Bound port, valid after start().
  std::uint16_t port() const { return port_; }
  ServerStats stats() const;

 private:
  struct Connection;
  struct Job {
    std::shared_ptr<Connection> conn;
    wire::Request request;
  };

  void accept_loop();
  void reader_loop(std::shared_ptr<Connection> conn);
  void consumer_loop();
  void send_response(Connection& conn, const wire::Response& resp);
  void count_protocol_error();

  const OracleSpec& oracle_;
  ServerOptions opts_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};

  std::thread acceptor_;
  std::thread consumer_;

  std::mutex conn_mu_;
  std::list<std::shared_ptr<Connection>> connections_;
  std::list<std::thread> readers_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Job> queue_;

  mutable std::mutex stats_mu_;
  ServerStats stats_;
};

}  // namespace duel::harness
