#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

namespace kqa {

// Exponential output transform: y -> -exp(-(y + shift) / c_m). Compresses
// large outputs and stretches small ones; strictly increasing in y.
struct TransformState {
  bool enabled = false;
  double c_m = 1.0;
  double shift = 0.0;  // added to raw y; max(0, -min(y_init))

  double apply(double y) const {
    if (!enabled) return y;
    // Far below the initial minimum the exponential is continued linearly
    // (matching value and slope at kTail) so outputs stay finite without ties.
    constexpr double kTail = 600.0;
    const double arg = -(y + shift) / c_m;
    if (arg <= kTail) return -std::exp(arg);
    return -std::exp(kTail) * (1.0 + (arg - kTail));
  }

  static TransformState identity() { return {}; }
};

/// Fits c_m = alpha_exp * mean(y_init + shift). Degenerate data (shifted mean
/// at or below 1e-12) yields a disabled transform.
inline TransformState fit_transform(std::span<const double> y_init, double alpha_exp) {
  if (y_init.empty()) throw std::invalid_argument("fit_transform: empty initial outputs");
  if (!(alpha_exp > 0.0)) throw std::invalid_argument("fit_transform: alpha_exp must be positive");
  TransformState t;
  const double lo = *std::min_element(y_init.begin(), y_init.end());
  t.shift = std::max(0.0, -lo);
  double sum = 0.0;
  for (double y : y_init) sum += y + t.shift;
  const double mean = sum / static_cast<double>(y_init.size());
  if (!(mean > 1e-12) || !std::isfinite(mean)) {
    t.enabled = false;
    return t;
  }
  t.enabled = true;
  t.c_m = alpha_exp * mean;
  return t;
}

}  // namespace kqa
