// SPDX-License-Identifier: Apache-2.0
#include "duel/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace duel {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform_from_seed(std::uint64_t seed) {
  return static_cast<double>(mix64(seed) >> 11) * 0x1.0p-53;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::string stream_id)
    : seed_(seed), stream_id_(std::move(stream_id)), engine_(mix64(seed)) {}

RngStream RngStream::split(std::string_view label) const {
  std::string child_id = stream_id_;
  child_id += '/';
  child_id += label;
  return RngStream(mix64(seed_ ^ fnv1a(label)), std::move(child_id));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n + 1) % n;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return x % n;
}

}  // namespace duel
