#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace rttseg {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// Smallest variance (ms^2) any Gaussian component may take.
inline constexpr double kVarianceFloor = 1e-9;

inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - top);
  return top + std::log(acc);
}

inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

inline double normal_logpdf(double y, double mean, double variance) {
  const double d = y - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + d * d / variance);
}

}  // namespace rttseg
