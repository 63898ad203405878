// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "duel/harness/wire.hpp"
#include "duel/oracle.hpp"

namespace duel::harness {

/// Raised once the retry budget for a request is spent. The CLI maps it to exit code 3.
struct OracleUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClientOptions {
  std::chrono::milliseconds timeout{5000};
  int retries = 3;
  std::chrono::milliseconds backoff{100};
};

/// Labeling endpoint backed by the oracle service. Draws the pair seed from
/// the caller's stream exactly as the in-process oracle does and sends the pair
/// in ascending action-id order, so both endpoints return the same triplets.
class RemoteOracle final : public LabelingEndpoint {
 public:
  RemoteOracle(std::string host, std::uint16_t port, LabelMode mode, ClientOptions opts = {});
  ~RemoteOracle() override;
  RemoteOracle(const RemoteOracle&) = delete;
  RemoteOracle& operator=(const RemoteOracle&) = delete;

  PreferenceTriplet label_pair(const ContextVec& x, const ResponseRef& y, const ResponseRef& yp,
                               RngStream& rng, std::int64_t round) override;

  /// One request/response exchange with retries. Server-side error responses
  /// raise wire::ProtocolError without retrying.
  wire::Response call(const wire::Request& req);

  std::uint64_t next_id() { return ++last_id_; }

 private:
  void connect();
  void disconnect();

  std::string host_;
  std::uint16_t port_;
  LabelMode mode_;
  ClientOptions opts_;
  int fd_ = -1;
  std::uint64_t last_id_ = 0;
};

/// Client side of label_pair.
inline PreferenceTriplet remote_label(RemoteOracle& client, const ContextVec& x, const ResponseRef& y,
                                      const ResponseRef& yp, RngStream& rng, std::int64_t round = 0) {
  return client.label_pair(x, y, yp, rng, round);
}

}  // namespace duel::harness
