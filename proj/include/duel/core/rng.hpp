// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace duel {

/// SplitMix64 finalizer; used to derive child seeds and per-pair draws.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s);

/// Uniform double in [0, 1) that is a pure function of `seed`.
double uniform_from_seed(std::uint64_t seed);

/// A named, reproducible random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not (their algorithms vary across
/// library vendors), so the conversions to uniform/normal/integer draws are done
/// here to keep logs byte-identical across toolchains.
///
/// split(label) derives a child stream whose seed is mix64(seed ^ hash(label));
/// children of the same parent with distinct labels are independent streams
/// and do not consume state from the parent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::string stream_id = "root");

  RngStream split(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1), 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  /// Uniform integer in [0, n); n > 0. Rejection sampling, unbiased.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::string stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace duel
