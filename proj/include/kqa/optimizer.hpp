#pragma once

// The serial black-box optimization loop:
//   (0) random initial samples, transform fit, direct surrogate fit
//   (1) acquisition QUBO (+ domain-wall penalty for encoded variables)
//   (2) QUBO solve
//   (3) candidate selection, decode, black-box evaluation
//   (4) transform the output and grow the surrogate by one sample

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "kqa/benchmarks.hpp"
#include "kqa/encoding.hpp"
#include "kqa/kernel_surrogate.hpp"
#include "kqa/problem.hpp"
#include "kqa/qubo.hpp"
#include "kqa/random.hpp"
#include "kqa/solver.hpp"
#include "kqa/transform.hpp"

namespace kqa {

struct CycleRecord {
  int cycle = 0;  // -n_init .. -1 for the initial samples, 1 .. n_cycles afterwards
  std::vector<double> x_new;
  double y_new_raw = 0.0;
  double f_best_so_far = 0.0;
  std::vector<double> x_best_so_far;
  std::optional<double> correlation;  // nullopt: undefined (initial phase or constant data)
  double t_model_ms = 0.0;
  double t_solve_ms = 0.0;
  double t_eval_ms = 0.0;
  bool duplicate = false;  // candidate selection could not find an unseen point
};

struct RunHistory {
  std::vector<CycleRecord> records;
  OptimizerConfig config;
  std::uint64_t seed = 0;
  std::vector<double> best_x;
  double best_y = 0.0;
  TransformState transform;
  std::size_t initial_collisions = 0;  // initial samples accepted as duplicates
  std::optional<std::string> failure;  // set when the black box failed mid-run

  bool completed() const { return !failure; }
};

namespace detail {
inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<double> random_point(const SpaceCodec& codec, Rng& rng) {
  const auto& space = codec.space();
  std::vector<double> x(space.size());
  for (std::size_t v = 0; v < space.size(); ++v) {
    const auto& disc = codec.discretization_of(v);
    if (!disc) {
      x[v] = coin(rng) ? 1.0 : 0.0;
    } else {
      x[v] = disc->grid[static_cast<std::size_t>(uniform_index(rng, disc->n_bins()))];
    }
  }
  return x;
}
}  // namespace detail

/// n_init grid points, pairwise distinct in encoded form when possible. After
/// 100 * n_init draws duplicates are accepted; `collisions` counts them.
inline std::vector<std::vector<double>> sample_initial(const SpaceCodec& codec, int n_init, Rng& rng,
                                                       std::size_t* collisions = nullptr) {
  std::vector<std::vector<double>> out;
  std::unordered_set<std::string> seen;
  const long max_attempts = 100L * n_init;
  long attempts = 0;
  std::size_t dup = 0;
  while (static_cast<int>(out.size()) < n_init) {
    auto x = detail::random_point(codec, rng);
    const std::string key = bits_key(codec.encode(x));
    ++attempts;
    if (seen.count(key) != 0) {
      if (attempts < max_attempts) continue;
      ++dup;
    }
    seen.insert(key);
    out.push_back(std::move(x));
  }
  if (collisions) *collisions = dup;
  return out;
}

/// First pool entry (after mapping to its valid encoding) that is not in the
/// dataset. If the whole pool was seen, single-bit neighbours of best_x are
/// tried in random order, then a short random walk, then (for codes of at
/// most 20 bits) a full scan. `duplicate` is set if nothing unseen was found.
inline Bits pick_candidate(const SolveResult& result, const Dataset& data, const SpaceCodec& codec, Rng& rng,
                           bool* duplicate = nullptr) {
  if (duplicate) *duplicate = false;
  for (const auto& c : result.pool) {
    Bits b = codec.canonical(c.x);
    if (!data.contains(b)) return b;
  }
  const Bits& best = result.pool.empty() ? result.best_x : result.pool.front().x;
  std::vector<std::size_t> order(best.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  for (std::size_t i : order) {
    Bits b = best;
    b[i] ^= 1u;
    b = codec.canonical(b);
    if (!data.contains(b)) return b;
  }
  // Every neighbour was seen too; walk randomly for a while before giving up.
  Bits b = codec.canonical(best);
  for (std::size_t step = 0; step < 4 * best.size(); ++step) {
    b[static_cast<std::size_t>(uniform_index(rng, b.size()))] ^= 1u;
    b = codec.canonical(b);
    if (!data.contains(b)) return b;
  }
  // Small codes: scan the whole cube so an unseen point is never missed.
  if (best.size() <= 20) {
    for (std::uint64_t v = 0; v < (1ull << best.size()); ++v) {
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>((v >> i) & 1u);
      b = codec.canonical(b);
      if (!data.contains(b)) return b;
    }
  }
  if (duplicate) *duplicate = true;
  return codec.canonical(best);
}

/// Auto penalty weight: 2 * max |coefficient| of the acquisition + 1.
inline double auto_penalty_weight(const QuboModel& acquisition) { return 2.0 * max_abs_coefficient(acquisition) + 1.0; }

/// Acquisition plus, when the space has encoded variables, the domain-wall penalty.
inline QuboModel cycle_model(const QuboModel& acquisition, const VariableSpace& space, std::optional<double> weight) {
  if (space.all_binary()) return acquisition;
  const double w = weight ? *weight : auto_penalty_weight(acquisition);
  return add_scaled(acquisition, domain_wall_penalty(space, w), 1.0);
}

/// Largest |L (K + lambda I) - I| entry for both kernels (debug checks).
inline double inverse_residual(const SurrogateState& s) {
  const auto& X = s.inputs();
  const double g = s.config().gamma, lam = s.config().lambda;
  Eigen::MatrixXd Ks = ((X * X.transpose()).array() + g).matrix();
  Eigen::MatrixXd Km = Ks.array().square().matrix();
  Ks.diagonal().array() += lam;
  Km.diagonal().array() += lam;
  const auto I = Eigen::MatrixXd::Identity(Ks.rows(), Ks.cols());
  return std::max((s.L_mu() * Km - I).cwiseAbs().maxCoeff(), (s.L_sigma() * Ks - I).cwiseAbs().maxCoeff());
}

/// Called once per record as soon as it is final, in cycle order.
using RecordSink = std::function<void(const CycleRecord&)>;

inline RunHistory run(const BlackBox& black_box, const VariableSpace& space, OptimizerConfig cfg, QuboSolver& solver,
                      const RecordSink& sink = {}) {
  cfg = validate_config(std::move(cfg), space);
  const SpaceCodec codec(space);
  RunHistory hist;
  hist.config = cfg;
  hist.seed = cfg.seed;
  hist.records.reserve(static_cast<std::size_t>(cfg.n_init + cfg.n_cycles));

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng pick_rng(derive_seed(cfg.seed, 2));
  Dataset data;
  double best_y = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;

  auto evaluate_box = [&](const std::vector<double>& x, CycleRecord& rec) -> bool {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.y_new_raw = black_box(x);
    } catch (const std::exception& e) {
      hist.failure = std::string("black-box evaluation failed at cycle ") + std::to_string(rec.cycle) + ": " + e.what();
      return false;
    }
    rec.t_eval_ms = detail::ms_since(t0);
    if (!std::isfinite(rec.y_new_raw)) {
      hist.failure = "black-box returned a non-finite value at cycle " + std::to_string(rec.cycle);
      return false;
    }
    rec.x_new = x;
    if (rec.y_new_raw < best_y) {
      best_y = rec.y_new_raw;
      best_x = x;
    }
    rec.f_best_so_far = best_y;
    rec.x_best_so_far = best_x;
    return true;
  };
  auto finish = [&]() {
    hist.best_x = best_x;
    hist.best_y = best_y;
    return hist;
  };

  // (0) initial exploration
  const auto initial = sample_initial(codec, cfg.n_init, init_rng, &hist.initial_collisions);
  std::vector<double> y_init;
  for (int k = 0; k < cfg.n_init; ++k) {
    CycleRecord rec;
    rec.cycle = k - cfg.n_init;
    if (!evaluate_box(initial[static_cast<std::size_t>(k)], rec)) return finish();
    y_init.push_back(rec.y_new_raw);
    if (sink) sink(rec);
    hist.records.push_back(std::move(rec));
  }

  const auto t_fit = std::chrono::steady_clock::now();
  hist.transform = cfg.alpha_exp ? fit_transform(y_init, *cfg.alpha_exp) : TransformState::identity();
  std::vector<Bits> X;
  std::vector<double> y_model;
  for (int k = 0; k < cfg.n_init; ++k) {
    Sample s;
    s.x_decoded = initial[static_cast<std::size_t>(k)];
    s.x_bits = codec.encode(s.x_decoded);
    s.y_raw = y_init[static_cast<std::size_t>(k)];
    s.y_model = hist.transform.apply(s.y_raw);
    X.push_back(s.x_bits);
    y_model.push_back(s.y_model);
    data.add(std::move(s));
  }
  SurrogateState state = SurrogateState::fit_initial(X, y_model, {cfg.gamma, cfg.lambda});
  double carry_model_ms = detail::ms_since(t_fit);
  IncrementalMuAssembler incremental;

  for (int c = 1; c <= cfg.n_cycles; ++c) {
    CycleRecord rec;
    rec.cycle = c;

    // (1) surrogate -> QUBO
    auto t0 = std::chrono::steady_clock::now();
    QuboModel acq = cfg.incremental_assembly ? incremental.update(state) : state.assemble_mu();
    if (cfg.debug_checks && cfg.incremental_assembly) {
      const double diff = (acq.quadratic() - state.assemble_mu().quadratic()).cwiseAbs().maxCoeff();
      if (diff > 1e-9 * std::max(1.0, acq.quadratic().cwiseAbs().maxCoeff()))
        throw std::logic_error("incremental mean assembly diverged from full assembly by " + std::to_string(diff));
    }
    if (cfg.beta > 0.0) acq = add_scaled(acq, state.assemble_sigma(), -cfg.beta);
    const QuboModel model = cycle_model(acq, space, cfg.domain_wall_penalty_weight);
    rec.correlation = training_correlation(state);
    rec.t_model_ms = carry_model_ms + detail::ms_since(t0);

    // (2) solve
    t0 = std::chrono::steady_clock::now();
    SolveRequest req;
    req.model = model;
    req.budget = cfg.budget;
    req.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(c));
    req.n_restarts = cfg.n_restarts;
    req.pool_size = cfg.pool_size;
    req.verify_incremental = cfg.debug_checks;
    const SolveResult res = solver.solve(req);
    rec.t_solve_ms = detail::ms_since(t0);

    // (3) pick, decode, evaluate
    Bits bits = pick_candidate(res, data, codec, pick_rng, &rec.duplicate);
    const std::vector<double> x = codec.decode(bits);
    if (!evaluate_box(x, rec)) return finish();

    // (4) dataset and surrogate update
    t0 = std::chrono::steady_clock::now();
    Sample s;
    s.x_bits = std::move(bits);
    s.x_decoded = x;
    s.y_raw = rec.y_new_raw;
    s.y_model = hist.transform.apply(s.y_raw);
    state.append_sample(s.x_bits, s.y_model);
    data.add(std::move(s));
    if (cfg.debug_checks) {
      const double r = inverse_residual(state);
      if (!(r <= 1e-8 * std::max(1.0, state.L_mu().cwiseAbs().maxCoeff())))
        throw std::logic_error("inverse residual " + std::to_string(r) + " after cycle " + std::to_string(c));
    }
    carry_model_ms = detail::ms_since(t0);
    if (sink) sink(rec);
    hist.records.push_back(std::move(rec));
  }
  return finish();
}

}  // namespace kqa
