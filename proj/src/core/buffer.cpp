// SPDX-License-Identifier: Apache-2.0
#include "duel/core/buffer.hpp"

#include <mutex>

#include "duel/core/errors.hpp"

namespace duel {

ExperienceBuffer::ExperienceBuffer(const ExperienceBuffer& other) : triplets_(other.snapshot()) {}

ExperienceBuffer& ExperienceBuffer::operator=(const ExperienceBuffer& other) {
  if (this != &other) {
    auto copy = other.snapshot();
    std::unique_lock lock(mu_);
    triplets_ = std::move(copy);
  }
  return *this;
}

void ExperienceBuffer::append(PreferenceTriplet t) {
  if (t.source != LabelSource::OracleLabel) {
    throw InputError("ExperienceBuffer: only oracle-labeled triplets may be stored");
  }
  if (t.winner.action_id == t.loser.action_id) {
    throw InputError("ExperienceBuffer: winner and loser must differ");
  }
  std::unique_lock lock(mu_);
  triplets_.push_back(std::move(t));
}

std::size_t ExperienceBuffer::size() const {
  std::shared_lock lock(mu_);
  return triplets_.size();
}

PreferenceTriplet ExperienceBuffer::at(std::size_t i) const {
  std::shared_lock lock(mu_);
  return triplets_.at(i);
}

std::vector<PreferenceTriplet> ExperienceBuffer::sample_batch(std::size_t b, RngStream& rng) const {
  std::shared_lock lock(mu_);
  if (triplets_.empty()) throw StateError("ExperienceBuffer: cannot sample from an empty buffer");
  std::vector<PreferenceTriplet> batch;
  batch.reserve(b);
  for (std::size_t i = 0; i < b; ++i) batch.push_back(triplets_[rng.uniform_index(triplets_.size())]);
  return batch;
}

std::vector<PreferenceTriplet> ExperienceBuffer::snapshot() const {
  std::shared_lock lock(mu_);
  return triplets_;
}

}  // namespace duel
