// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace duel {

using Vec = std::vector<double>;

/// A prompt, represented as a fixed-dimension real vector.
struct ContextVec {
  Vec values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const ContextVec&) const = default;
};

/// A response: its index in the response universe plus cached joint features.
struct ResponseRef {
  int action_id = -1;
  Vec features;

  bool operator==(const ResponseRef&) const = default;
};

enum class LabelSource { OracleLabel, SyntheticLabel };

std::string_view to_string(LabelSource s);

/// A labeled duel (x, y+, y-).
struct PreferenceTriplet {
  ContextVec context;
  ResponseRef winner;
  ResponseRef loser;
  LabelSource source = LabelSource::OracleLabel;
  std::int64_t round = 0;

  bool operator==(const PreferenceTriplet&) const = default;
};

/// Joint features of every action in the universe for one context, row-major
/// [num_actions x feature_dim].
struct ContextFeatures {
  ContextVec context;
  std::size_t num_actions = 0;
  std::size_t feature_dim = 0;
  Vec table;

  std::span<const double> row(int action_id) const {
    return {table.data() + static_cast<std::size_t>(action_id) * feature_dim, feature_dim};
  }
  ResponseRef response(int action_id) const {
    auto r = row(action_id);
    return ResponseRef{action_id, Vec(r.begin(), r.end())};
  }
};

}  // namespace duel
