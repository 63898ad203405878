// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>

namespace duel {

/// Logistic function, evaluated on the side that cannot overflow.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow; -log sigmoid(z) == softplus(-z).
inline double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

/// Population mean and variance (divide by n).
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Shifted by the first element, so equal inputs give exactly zero variance.
inline Moments population_moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  const double x0 = xs.front();
  double shift = 0.0;
  for (double x : xs) shift += x - x0;
  shift /= n;
  for (double x : xs) m.variance += (x - x0 - shift) * (x - x0 - shift);
  m.variance /= n;
  m.mean = x0 + shift;
  return m;
}

}  // namespace duel
