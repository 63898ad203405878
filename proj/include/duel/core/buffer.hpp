// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <shared_mutex>
#include <vector>

#include "duel/core/rng.hpp"
#include "duel/core/types.hpp"

namespace duel {

/// Append-only store of oracle-labeled duels (the experience D_t).
///
/// Single writer, many readers: readers hold a shared lock and always observe a
/// consistent prefix of the appended sequence.
class ExperienceBuffer {
 public:
  ExperienceBuffer() = default;
  ExperienceBuffer(const ExperienceBuffer& other);
  ExperienceBuffer& operator=(const ExperienceBuffer& other);

  /// Throws InputError for SyntheticLabel triplets; they never enter D_t.
  void append(PreferenceTriplet t);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  PreferenceTriplet at(std::size_t i) const;

  /// b triplets drawn uniformly with replacement. Throws StateError when empty.
  std::vector<PreferenceTriplet> sample_batch(std::size_t b, RngStream& rng) const;

  /// Copy of the first n triplets, n = size() at the time of the call.
  std::vector<PreferenceTriplet> snapshot() const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<PreferenceTriplet> triplets_;
};

}  // namespace duel
