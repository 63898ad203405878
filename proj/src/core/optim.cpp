// SPDX-License-Identifier: Apache-2.0
#include "duel/core/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "duel/core/errors.hpp"
#include "duel/simd/kernels.hpp"

namespace duel {

std::string_view to_string(UpdateRule r) { return r == UpdateRule::Sgd ? "sgd" : "adam"; }
std::string_view to_string(LrSchedule s) { return s == LrSchedule::Constant ? "constant" : "cosine"; }

UpdateRule parse_update_rule(std::string_view s) {
  if (s == "sgd") return UpdateRule::Sgd;
  if (s == "adam") return UpdateRule::Adam;
  throw InputError("unknown update rule '" + std::string(s) + "'");
}

LrSchedule parse_lr_schedule(std::string_view s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  throw InputError("unknown lr schedule '" + std::string(s) + "'");
}

Optimizer::Optimizer(const OptimizerConfig& cfg, std::size_t num_params) : cfg_(cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw InputError("Optimizer: learning rate must be >= 0");
  if (cfg.rule == UpdateRule::Adam) {
    m_.assign(num_params, 0.0);
    v_.assign(num_params, 0.0);
  }
}

double Optimizer::current_lr() const {
  if (cfg_.schedule == LrSchedule::Constant || cfg_.total_steps == 0) return cfg_.learning_rate;
  const double frac = std::min(1.0, static_cast<double>(t_) / static_cast<double>(cfg_.total_steps));
  return cfg_.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw InputError("Optimizer: gradient size mismatch");
  const double lr = current_lr();
  ++t_;
  if (cfg_.rule == UpdateRule::Sgd) {
    simd::axpy(-lr, grad, params);
    return;
  }
  if (m_.size() != params.size()) throw InputError("Optimizer: parameter count changed");
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
  }
}

}  // namespace duel
