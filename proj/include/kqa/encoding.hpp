#pragma once

// A priori domain-wall conversion. A variable with n_bins grid values uses
// n_bins - 1 bits; grid index k is encoded as k leading ones followed by
// zeros, and any bit vector decodes to grid[popcount(bits)].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kqa/problem.hpp"
#include "kqa/qubo.hpp"

namespace kqa {

struct Discretization {
  std::vector<double> grid;
  std::optional<double> step;  // set for uniform grids only

  std::size_t n_bins() const { return grid.size(); }
  double lower() const { return grid.front(); }
  double upper() const { return grid.back(); }

  static Discretization uniform(double lower, double upper, std::size_t n_bins) {
    if (n_bins < 2 || !(lower < upper)) throw std::invalid_argument("Discretization: invalid uniform grid");
    Discretization d;
    const double step = (upper - lower) / static_cast<double>(n_bins - 1);
    d.step = step;
    d.grid.resize(n_bins);
    const double span = upper - lower, last = static_cast<double>(n_bins - 1);
    for (std::size_t i = 0; i < n_bins; ++i) d.grid[i] = lower + span * static_cast<double>(i) / last;
    d.grid.back() = upper;
    return d;
  }

  static Discretization explicit_grid(std::vector<double> grid) {
    if (grid.size() < 2) throw std::invalid_argument("Discretization: grid needs at least two values");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i - 1] < grid[i])) throw std::invalid_argument("Discretization: grid must be strictly increasing");
    Discretization d;
    d.grid = std::move(grid);
    return d;
  }
};

inline Discretization discretization(const VariableSpec& s) {
  if (s.kind == VarKind::binary) throw std::invalid_argument("discretization: binary variable has no grid");
  if (s.spacing == Spacing::uniform) return Discretization::uniform(s.lower, s.upper, s.n_bins);
  return Discretization::explicit_grid(s.grid);
}

/// Grid index of x: round-half-up of (x - lower)/step for uniform grids,
/// the nearest point (ties upward) for explicit grids.
inline std::size_t grid_index(double x, const Discretization& d) {
  if (!(x >= d.lower() && x <= d.upper()))
    throw std::out_of_range("encode_real: value " + std::to_string(x) + " outside [" + std::to_string(d.lower()) + ", " +
                            std::to_string(d.upper()) + "]");
  if (d.step) {
    const auto k = static_cast<std::size_t>(std::floor((x - d.lower()) / *d.step + 0.5));
    return std::min(k, d.n_bins() - 1);
  }
  const auto hi = static_cast<std::size_t>(std::lower_bound(d.grid.begin(), d.grid.end(), x) - d.grid.begin());
  if (hi == 0) return 0;
  return (x - d.grid[hi - 1] < d.grid[hi] - x) ? hi - 1 : hi;
}

inline Bits encode_real(double x, const Discretization& d) {
  const std::size_t k = grid_index(x, d);
  Bits b(d.n_bins() - 1, 0);
  for (std::size_t i = 0; i < k; ++i) b[i] = 1;
  return b;
}

inline double decode_real(std::span<const std::uint8_t> bits, const Discretization& d) {
  if (bits.size() != d.n_bins() - 1)
    throw std::invalid_argument("decode_real: expected " + std::to_string(d.n_bins() - 1) + " bits, got " +
                                std::to_string(bits.size()));
  std::size_t ones = 0;
  for (auto b : bits) ones += (b != 0);
  return d.grid[ones];
}

/// Per-variable encoders for a whole space, built once.
class SpaceCodec {
 public:
  explicit SpaceCodec(const VariableSpace& space) : space_(space) {
    discs_.reserve(space.size());
    for (const auto& v : space.vars)
      discs_.push_back(v.kind == VarKind::binary ? std::nullopt : std::optional{discretization(v)});
  }

  const VariableSpace& space() const { return space_; }
  const std::optional<Discretization>& discretization_of(std::size_t var) const { return discs_[var]; }

  Bits encode(std::span<const double> x) const {
    if (x.size() != space_.size()) throw std::invalid_argument("encode_point: wrong number of variables");
    Bits out(space_.total_bits, 0);
    for (std::size_t v = 0; v < space_.size(); ++v) {
      const std::size_t off = space_.offsets[v];
      if (!discs_[v]) {
        if (x[v] != 0.0 && x[v] != 1.0) throw std::invalid_argument("encode_point: binary variable must be 0 or 1");
        out[off] = x[v] != 0.0;
        continue;
      }
      const Bits b = encode_real(x[v], *discs_[v]);
      std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
    }
    return out;
  }

  std::vector<double> decode(std::span<const std::uint8_t> bits) const {
    if (bits.size() != space_.total_bits) throw std::invalid_argument("decode_point: length mismatch");
    std::vector<double> x(space_.size());
    for (std::size_t v = 0; v < space_.size(); ++v) {
      const std::size_t off = space_.offsets[v];
      if (!discs_[v]) {
        x[v] = bits[off] ? 1.0 : 0.0;
      } else {
        x[v] = decode_real(bits.subspan(off, space_.width(v)), *discs_[v]);
      }
    }
    return x;
  }

  /// Maps any bit vector to the valid encoding of the point it decodes to.
  Bits canonical(std::span<const std::uint8_t> bits) const {
    if (bits.size() != space_.total_bits) throw std::invalid_argument("canonical: length mismatch");
    Bits out(bits.begin(), bits.end());
    for (std::size_t v = 0; v < space_.size(); ++v) {
      if (!discs_[v]) continue;
      const std::size_t off = space_.offsets[v], w = space_.width(v);
      std::size_t ones = 0;
      for (std::size_t i = 0; i < w; ++i) ones += (out[off + i] != 0);
      for (std::size_t i = 0; i < w; ++i) out[off + i] = i < ones;
    }
    return out;
  }

 private:
  VariableSpace space_;
  std::vector<std::optional<Discretization>> discs_;
};

inline Bits encode_point(std::span<const double> x, const VariableSpace& space) { return SpaceCodec(space).encode(x); }

inline std::vector<double> decode_point(std::span<const std::uint8_t> bits, const VariableSpace& space) {
  return SpaceCodec(space).decode(bits);
}

/// weight * sum over each non-binary block of x_{i+1} (1 - x_i). Zero exactly
/// on valid domain walls, at least `weight` otherwise.
inline QuboModel domain_wall_penalty(const VariableSpace& space, double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("domain_wall_penalty: weight must be positive");
  QuboModel m(space.total_bits);
  for (std::size_t v = 0; v < space.size(); ++v) {
    if (space.vars[v].kind == VarKind::binary) continue;
    const std::size_t off = space.offsets[v], w = space.width(v);
    for (std::size_t i = 0; i + 1 < w; ++i) {
      m.add_linear(off + i + 1, weight);
      m.add_pair(off + i, off + i + 1, -weight);
    }
  }
  return m;
}

inline bool is_valid_wall(std::span<const std::uint8_t> bits, const VariableSpace& space) {
  for (std::size_t v = 0; v < space.size(); ++v) {
    if (space.vars[v].kind == VarKind::binary) continue;
    const std::size_t off = space.offsets[v], w = space.width(v);
    for (std::size_t i = 0; i + 1 < w; ++i)
      if (bits[off + i + 1] && !bits[off + i]) return false;
  }
  return true;
}

}  // namespace kqa
