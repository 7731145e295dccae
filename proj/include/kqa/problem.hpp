#pragma once

// Core value types: variable declarations, the encoded bit layout, samples,
// datasets and run configuration.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

namespace kqa {

/// A binary decision vector. One byte per bit, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

inline std::string bits_key(const Bits& b) { return {b.begin(), b.end()}; }

enum class VarKind { binary, real, integer };
enum class Spacing { uniform, explicit_grid };

struct VariableSpec {
  VarKind kind = VarKind::binary;
  double lower = 0.0;
  double upper = 1.0;
  std::size_t n_bins = 2;
  Spacing spacing = Spacing::uniform;
  std::vector<double> grid;  // only for explicit_grid

  static VariableSpec binary() { return {}; }

  static VariableSpec real(double lower, double upper, std::size_t n_bins) {
    return {VarKind::real, lower, upper, n_bins, Spacing::uniform, {}};
  }

  static VariableSpec real_grid(std::vector<double> grid) {
    VariableSpec s{VarKind::real, 0.0, 0.0, grid.size(), Spacing::explicit_grid, std::move(grid)};
    if (!s.grid.empty()) {
      s.lower = s.grid.front();
      s.upper = s.grid.back();
    }
    return s;
  }

  // Integers are a real variable on the grid of consecutive integers.
  static VariableSpec integer(long lower, long upper) {
    std::vector<double> g;
    for (long v = lower; v <= upper; ++v) g.push_back(static_cast<double>(v));
    VariableSpec s = real_grid(std::move(g));
    s.kind = VarKind::integer;
    s.lower = static_cast<double>(lower);
    s.upper = static_cast<double>(upper);
    return s;
  }

  /// Number of bits this variable occupies after domain-wall encoding.
  std::size_t width() const { return kind == VarKind::binary ? 1 : n_bins - 1; }
};

struct VariableSpace {
  std::vector<VariableSpec> vars;
  std::vector<std::size_t> offsets;  // first bit of each variable
  std::size_t total_bits = 0;

  std::size_t size() const { return vars.size(); }
  std::size_t width(std::size_t i) const { return vars[i].width(); }
  bool all_binary() const {
    for (const auto& v : vars)
      if (v.kind != VarKind::binary) return false;
    return true;
  }
};

inline void check_spec(const VariableSpec& s, std::size_t index) {
  const std::string where = "variable " + std::to_string(index) + ": ";
  if (s.kind == VarKind::binary) return;
  if (s.n_bins < 2) throw std::invalid_argument(where + "n_bins must be at least 2");
  if (!(std::isfinite(s.lower) && std::isfinite(s.upper)) || !(s.lower < s.upper))
    throw std::invalid_argument(where + "invalid bounds (lower must be < upper)");
  if (s.spacing == Spacing::explicit_grid) {
    if (s.grid.size() != s.n_bins) throw std::invalid_argument(where + "grid size differs from n_bins");
    for (std::size_t i = 1; i < s.grid.size(); ++i)
      if (!(s.grid[i - 1] < s.grid[i]))
        throw std::invalid_argument(where + "explicit grid must be strictly increasing");
    if (s.grid.front() != s.lower || s.grid.back() != s.upper)
      throw std::invalid_argument(where + "explicit grid must start at lower and end at upper");
  }
}

/// Validates the specs and lays the variables out as contiguous bit ranges.
inline VariableSpace build_space(std::vector<VariableSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("variable space needs at least one variable");
  VariableSpace space;
  space.offsets.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    check_spec(specs[i], i);
    space.offsets.push_back(space.total_bits);
    space.total_bits += specs[i].width();
  }
  space.vars = std::move(specs);
  return space;
}

struct Sample {
  Bits x_bits;
  std::vector<double> x_decoded;
  double y_raw = 0.0;
  double y_model = 0.0;
};

/// Ordered list of evaluated pairs; row i of every Gram matrix is sample i.
class Dataset {
 public:
  void add(Sample s) {
    seen_.insert(bits_key(s.x_bits));
    samples_.push_back(std::move(s));
  }
  bool contains(const Bits& b) const { return seen_.count(bits_key(b)) != 0; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

 private:
  std::vector<Sample> samples_;
  std::unordered_set<std::string> seen_;
};

struct SweepBudget {
  std::uint64_t sweeps = 0;
};
struct TimeBudget {
  double ms = 0.0;
};
using SolverBudget = std::variant<SweepBudget, TimeBudget>;

struct OptimizerConfig {
  int n_init = 10;
  int n_cycles = 100;
  double beta = 0.0;
  double lambda = 1.0;
  double gamma = 0.0;
  std::optional<double> alpha_exp = 1.0;  // nullopt disables the output transform
  SolverBudget budget = SweepBudget{1000};
  std::uint64_t seed = 0;
  std::optional<double> domain_wall_penalty_weight;  // nullopt means auto
  int n_restarts = 4;
  int pool_size = 10;
  bool incremental_assembly = false;  // reuse Q_mu across cycles instead of re-assembling
  bool debug_checks = false;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

/// Checks a configuration against a space. Returns the config with defaults
/// resolved, or throws ConfigError listing every violation.
inline OptimizerConfig validate_config(OptimizerConfig cfg, const VariableSpace& space) {
  std::vector<std::string> bad;
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) bad.emplace_back("lambda must be positive");
  if (cfg.alpha_exp && !(*cfg.alpha_exp > 0.0)) bad.emplace_back("alpha_exp must be positive when the transform is enabled");
  if (cfg.n_init < 1) bad.emplace_back("n_init must be at least 1");
  if (cfg.n_cycles < 1) bad.emplace_back("n_cycles must be at least 1");
  if (!(cfg.beta >= 0.0)) bad.emplace_back("beta must be non-negative");
  if (!(cfg.gamma >= 0.0)) bad.emplace_back("gamma must be non-negative");
  if (cfg.domain_wall_penalty_weight && !(*cfg.domain_wall_penalty_weight > 0.0))
    bad.emplace_back("domain_wall_penalty_weight must be positive");
  if (cfg.n_restarts < 1) bad.emplace_back("n_restarts must be at least 1");
  if (cfg.pool_size < 1) bad.emplace_back("pool_size must be at least 1");
  if (space.total_bits == 0) bad.emplace_back("variable space has no bits");
  if (auto* t = std::get_if<TimeBudget>(&cfg.budget); t && !(t->ms > 0.0))
    bad.emplace_back("time budget must be positive");
  if (!bad.empty()) throw ConfigError(std::move(bad));

  if (auto* s = std::get_if<SweepBudget>(&cfg.budget); s && s->sweeps == 0) s->sweeps = 1;
  return cfg;
}

}  // namespace kqa
