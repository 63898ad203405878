// SPDX-License-Identifier: Apache-2.0
#include "duel/core/mlp.hpp"

#include <cmath>
#include <string>

#include "duel/core/errors.hpp"
#include "duel/simd/kernels.hpp"

namespace duel {

Mlp::Mlp(std::size_t input_dim, std::vector<std::size_t> hidden)
    : input_dim_(input_dim), hidden_(std::move(hidden)) {
  if (input_dim_ == 0) throw InputError("Mlp: input dimension must be positive");
  std::size_t in = input_dim_, off = 0;
  auto add = [&](std::size_t out) {
    if (out == 0) throw InputError("Mlp: layer width must be positive");
    layers_.push_back(Layer{in, out, off, off + in * out});
    off += in * out + out;
    in = out;
  };
  for (std::size_t h : hidden_) add(h);
  add(1);
  params_.assign(off, 0.0);
}

void Mlp::init_random(RngStream& rng, double scale, double bias_scale) {
  for (const Layer& l : layers_) {
    const double s = scale / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.w_off + i] = s * rng.normal();
    for (std::size_t i = 0; i < l.out; ++i) params_[l.b_off + i] = bias_scale * rng.normal();
  }
}

void Mlp::check_input(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw InputError("Mlp: input dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(input_dim_));
  }
}

double Mlp::forward(std::span<const double> x) const {
  check_input(x);
  Vec cur(x.begin(), x.end()), next;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    next.resize(l.out);
    simd::gemv(std::span<const double>(params_).subspan(l.w_off, l.in * l.out), l.out, l.in, cur,
               params_.data() + l.b_off, next);
    if (li + 1 < layers_.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    cur.swap(next);
  }
  return cur[0];
}

double Mlp::backward(std::span<const double> x, double scale, std::span<double> grad) const {
  check_input(x);
  if (grad.size() != params_.size()) throw InputError("Mlp: gradient buffer size mismatch");
  // Forward pass keeping every layer's input.
  std::vector<Vec> acts;
  acts.reserve(layers_.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    Vec next(l.out);
    simd::gemv(std::span<const double>(params_).subspan(l.w_off, l.in * l.out), l.out, l.in,
               acts.back(), params_.data() + l.b_off, next);
    if (li + 1 < layers_.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    acts.push_back(std::move(next));
  }
  const double value = acts.back()[0];

  // delta holds d(scale * f)/d(pre-activation) of the current layer.
  Vec delta{scale};
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const Vec& in = acts[li];
    for (std::size_t o = 0; o < l.out; ++o) {
      simd::axpy(delta[o], in, grad.subspan(l.w_off + o * l.in, l.in));
      grad[l.b_off + o] += delta[o];
    }
    if (li == 0) break;
    Vec prev(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      simd::axpy(delta[o], std::span<const double>(params_).subspan(l.w_off + o * l.in, l.in), prev);
    }
    // acts[li] is tanh output of the previous layer.
    for (std::size_t i = 0; i < l.in; ++i) prev[i] *= 1.0 - in[i] * in[i];
    delta.swap(prev);
  }
  return value;
}

}  // namespace duel
