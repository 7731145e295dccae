#pragma once

// Artificial landscapes used as black boxes, the half-flip treatment for their
// binary variants, and the named assessment presets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kqa/problem.hpp"
#include "kqa/random.hpp"

namespace kqa {

using BlackBox = std::function<double(std::span<const double>)>;

inline double rosenbrock(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("rosenbrock: need at least 2 inputs");
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = 1.0 - x[i];
    const double b = x[i + 1] - x[i] * x[i];
    f += a * a + 100.0 * b * b;
  }
  return f;
}

inline double rastrigin(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("rastrigin: need at least 1 input");
  double f = 10.0 * static_cast<double>(x.size());
  for (double xi : x) f += xi * xi - 10.0 * std::cos(2.0 * std::numbers::pi * xi);
  return f;
}

enum class Landscape { rosenbrock, rastrigin };

inline Landscape parse_landscape(const std::string& name) {
  if (name == "rosenbrock") return Landscape::rosenbrock;
  if (name == "rastrigin") return Landscape::rastrigin;
  throw std::invalid_argument("unknown landscape '" + name + "' (expected rosenbrock or rastrigin)");
}

inline std::string to_string(Landscape l) { return l == Landscape::rosenbrock ? "rosenbrock" : "rastrigin"; }

inline double evaluate_landscape(Landscape l, std::span<const double> x) {
  return l == Landscape::rosenbrock ? rosenbrock(x) : rastrigin(x);
}

/// floor(d/2) distinct positions, 1-indexed and sorted.
struct FlipMask {
  std::size_t d = 0;
  std::vector<std::size_t> indices;
  std::uint64_t seed = 0;

  bool flips(std::size_t zero_based) const {
    return std::binary_search(indices.begin(), indices.end(), zero_based + 1);
  }
};

inline FlipMask make_flip_mask(std::size_t d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("make_flip_mask: d must be at least 2");
  std::vector<std::size_t> all(d);
  for (std::size_t i = 0; i < d; ++i) all[i] = i + 1;
  Rng rng(seed);
  shuffle(all, rng);
  all.resize(d / 2);
  std::sort(all.begin(), all.end());
  return {d, std::move(all), seed};
}

inline std::vector<double> apply_flip(std::span<const double> x, const FlipMask& mask) {
  if (x.size() != mask.d) throw std::invalid_argument("apply_flip: length mismatch");
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j : mask.indices) out[j - 1] = 1.0 - out[j - 1];
  return out;
}

/// Black box over {0,1}^d evaluating the base landscape at the flipped input.
inline BlackBox make_flipped(Landscape base, const FlipMask& mask) {
  return [base, mask](std::span<const double> x) { return evaluate_landscape(base, apply_flip(x, mask)); };
}

inline BlackBox make_flipped(Landscape base, std::size_t d, std::uint64_t seed) {
  return make_flipped(base, make_flip_mask(d, seed));
}

struct Preset {
  std::string name;
  VariableSpace space;
  OptimizerConfig config;
  bool binary = false;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"r5n", "r5", "r10", "r20", "r40", "r80",
                                              "b40", "b80", "b160", "b320", "b640"};
  return names;
}

/// Assessment conditions: real presets on (-3, 3), binary presets unencoded.
/// All share n_init = 10, alpha_exp = 1, beta = 0, lambda = 1, gamma = 0.
inline Preset preset(const std::string& name) {
  std::size_t d = 0, n_bins = 0;
  bool binary = false;
  if (name == "r5n") {
    d = 5, n_bins = 301;
  } else if (name == "r5" || name == "r10" || name == "r20" || name == "r40" || name == "r80") {
    d = std::stoul(name.substr(1)), n_bins = 61;
  } else if (name == "b40" || name == "b80" || name == "b160" || name == "b320" || name == "b640") {
    d = std::stoul(name.substr(1)), binary = true;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  std::vector<VariableSpec> specs(d, binary ? VariableSpec::binary() : VariableSpec::real(-3.0, 3.0, n_bins));
  Preset p;
  p.name = name;
  p.space = build_space(std::move(specs));
  p.binary = binary;
  p.config.n_init = 10;
  p.config.n_cycles = 1000;
  p.config.alpha_exp = 1.0;
  p.config.beta = 0.0;
  p.config.lambda = 1.0;
  p.config.gamma = 0.0;
  return p;
}

}  // namespace kqa
