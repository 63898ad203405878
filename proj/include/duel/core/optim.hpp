// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "duel/core/types.hpp"

namespace duel {

enum class UpdateRule { Sgd, Adam };
enum class LrSchedule { Constant, Cosine };

std::string_view to_string(UpdateRule r);
std::string_view to_string(LrSchedule s);
UpdateRule parse_update_rule(std::string_view s);
LrSchedule parse_lr_schedule(std::string_view s);

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::Sgd;
  double learning_rate = 1e-2;
  LrSchedule schedule = LrSchedule::Constant;
  std::uint64_t total_steps = 0;  // cosine horizon; ignored for Constant
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order optimizer state for one flat parameter vector.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::size_t num_params);

  /// Learning rate for the next step (after the schedule).
  double current_lr() const;
  void step(std::span<double> params, std::span<const double> grad);
  std::uint64_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::uint64_t t_ = 0;
  Vec m_, v_;
};

}  // namespace duel
