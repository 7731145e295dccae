#pragma once

// QUBO minimization backends: multi-restart simulated annealing (default) and
// exhaustive enumeration for small dimensions (ground-truth oracle).

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "kqa/problem.hpp"
#include "kqa/qubo.hpp"
#include "kqa/random.hpp"

namespace kqa {

struct SolveRequest {
  QuboModel model;
  SolverBudget budget = SweepBudget{1000};
  std::uint64_t seed = 0;
  int n_restarts = 1;
  int pool_size = 10;
  bool parallel_restarts = false;
  bool verify_incremental = false;  // debug: re-evaluate after every accepted flip
};

struct Candidate {
  Bits x;
  double energy = 0.0;
};

struct SolveStats {
  std::uint64_t sweeps = 0;
  int restarts = 0;
  double elapsed_ms = 0.0;
  std::uint64_t verified_flips = 0;
};

struct SolveResult {
  Bits best_x;
  double best_energy = 0.0;
  std::vector<Candidate> pool;  // distinct, ascending energy
  SolveStats stats;
};

/// Common interface so the optimizer can swap backends.
class QuboSolver {
 public:
  virtual ~QuboSolver() = default;
  virtual SolveResult solve(const SolveRequest& req) = 0;
  virtual std::string name() const = 0;
};

namespace detail {

// Orders bit vectors by their value read as a little-endian integer.
inline bool little_endian_less(const Bits& a, const Bits& b) {
  for (std::size_t i = a.size(); i-- > 0;)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

inline bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  return little_endian_less(a.x, b.x);
}

// Bounded set of distinct low-energy candidates.
class CandidatePool {
 public:
  explicit CandidatePool(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  void offer(const Bits& x, double energy) {
    for (auto& c : items_)
      if (c.x == x) {
        c.energy = std::min(c.energy, energy);
        return;
      }
    Candidate cand{x, energy};
    if (items_.size() < capacity_) {
      items_.push_back(std::move(cand));
      return;
    }
    auto worst = std::max_element(items_.begin(), items_.end(), candidate_less);
    if (candidate_less(cand, *worst)) *worst = std::move(cand);
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::vector<Candidate> items_;
};

// Re-scores candidates with the reference evaluator and sorts them.
inline SolveResult finalize(const QuboModel& m, std::vector<Candidate> cands, std::size_t pool_size, SolveStats stats) {
  for (auto& c : cands) c.energy = evaluate(m, c.x);
  std::sort(cands.begin(), cands.end(), candidate_less);
  cands.erase(std::unique(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.x == b.x; }),
              cands.end());
  if (cands.size() > pool_size) cands.resize(pool_size);
  SolveResult r;
  r.best_x = cands.front().x;
  r.best_energy = cands.front().energy;
  r.pool = std::move(cands);
  r.stats = stats;
  return r;
}

}  // namespace detail

/// Exact minimizer by Gray-code enumeration; dim must not exceed 24. Ties go
/// to the smallest x read as a little-endian integer.
inline SolveResult solve_exhaustive(const SolveRequest& req) {
  const QuboModel& m = req.model;
  const std::size_t n = m.dim();
  if (n == 0) throw std::invalid_argument("solve_exhaustive: empty model");
  if (n > 24) throw std::invalid_argument("solve_exhaustive: dim " + std::to_string(n) + " exceeds 24");
  const auto t0 = std::chrono::steady_clock::now();
  const auto& Q = m.quadratic();
  const Eigen::VectorXd diag = Q.diagonal() + m.linear();

  // Keep a few extra candidates so rounding in the running energy cannot
  // push a true member of the top-k out before exact re-scoring.
  const std::size_t keep = static_cast<std::size_t>(std::max(req.pool_size, 1)) + 16;
  using Entry = std::pair<double, std::uint32_t>;
  auto cmp = [](const Entry& a, const Entry& b) { return a.first != b.first ? a.first < b.first : a.second < b.second; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);  // max-heap on (energy, value)

  Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));  // sum_{j != i} Q_ij x_j
  std::uint32_t x = 0;
  double e = m.constant();
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 0; k < total; ++k) {
    if (k > 0) {
      const auto i = static_cast<Eigen::Index>(std::countr_zero(k));
      const bool on = ((x >> i) & 1u) == 0;
      const double delta = on ? 1.0 : -1.0;
      e += delta * (diag(i) + 2.0 * h(i));
      x ^= (1u << i);
      h += delta * Q.col(i);
      h(i) -= delta * Q(i, i);
    }
    if (heap.size() < keep) {
      heap.emplace(e, x);
    } else if (cmp({e, x}, heap.top())) {
      heap.pop();
      heap.emplace(e, x);
    }
  }

  std::vector<Candidate> cands;
  while (!heap.empty()) {
    Bits b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = (heap.top().second >> i) & 1u;
    cands.push_back({std::move(b), 0.0});
    heap.pop();
  }
  SolveStats stats;
  stats.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return detail::finalize(m, std::move(cands), static_cast<std::size_t>(std::max(req.pool_size, 1)), stats);
}

namespace detail {

struct RestartOutcome {
  std::vector<Candidate> pool;
  std::uint64_t verified = 0;
};

// One annealing run: sequential single-bit-flip sweeps, geometric cooling
// from t_hot to t_cold. The local fields h_i = sum_{j != i} Q_ij x_j make each
// proposal O(1) and each accepted flip O(dim).
inline RestartOutcome anneal_once(const QuboModel& m, std::uint64_t sweeps, std::uint64_t seed, std::size_t pool_size,
                                  bool verify) {
  const std::size_t n = m.dim();
  const auto N = static_cast<Eigen::Index>(n);
  const auto& Q = m.quadratic();
  const Eigen::VectorXd diag = Q.diagonal() + m.linear();
  Rng rng(seed);

  Bits x(n);
  for (auto& b : x) b = coin(rng);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(N);
  for (Eigen::Index j = 0; j < N; ++j)
    if (x[static_cast<std::size_t>(j)]) h += Q.col(j);
  for (Eigen::Index i = 0; i < N; ++i)
    if (x[static_cast<std::size_t>(i)]) h(i) -= Q(i, i);
  double e = evaluate(m, x);

  const double scale = max_abs_coefficient(m);
  const double t_hot = scale > 0.0 ? scale * static_cast<double>(n) : 1.0;
  const double t_cold = scale > 0.0 ? 1e-3 * scale : 1e-3;
  const double ratio = sweeps > 1 ? std::pow(t_cold / t_hot, 1.0 / static_cast<double>(sweeps - 1)) : 1.0;

  CandidatePool pool(pool_size);
  Bits best = x;
  double best_e = e;
  const std::uint64_t record_from = sweeps - std::max<std::uint64_t>(1, sweeps / 10);
  std::uint64_t verified = 0;
  double t = sweeps > 1 ? t_hot : t_cold;

  for (std::uint64_t s = 0; s < sweeps; ++s) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const double sign = x[iu] ? -1.0 : 1.0;
      const double de = sign * (diag(i) + 2.0 * h(i));
      if (de > 0.0 && !(uniform01(rng) < std::exp(-de / t))) continue;
      x[iu] ^= 1u;
      e += de;
      h += sign * Q.col(i);
      h(i) -= sign * Q(i, i);
      if (verify) {
        const double ref = evaluate(m, x);
        if (std::abs(ref - e) > 1e-9 * std::max(1.0, std::abs(ref)))
          throw std::logic_error("anneal: incremental energy " + std::to_string(e) + " drifted from " + std::to_string(ref));
        ++verified;
      }
      if (e < best_e) {
        best_e = e;
        best = x;
      }
    }
    if (s >= record_from) pool.offer(x, e);
    t *= ratio;
  }
  pool.offer(best, best_e);
  return {pool.items(), verified};
}

}  // namespace detail

/// Multi-restart simulated annealing. In sweep mode the result depends only
/// on (model, sweeps, seed, n_restarts); time budgets are converted to sweeps
/// by a short calibration burst first.
inline SolveResult solve_sa(const SolveRequest& req) {
  const QuboModel& m = req.model;
  if (m.dim() == 0) throw std::invalid_argument("solve_sa: empty model");
  const auto t0 = std::chrono::steady_clock::now();
  const int restarts = std::max(req.n_restarts, 1);
  const auto pool_size = static_cast<std::size_t>(std::max(req.pool_size, 1));

  std::uint64_t total_sweeps = 1;
  if (const auto* s = std::get_if<SweepBudget>(&req.budget)) {
    total_sweeps = std::max<std::uint64_t>(s->sweeps, 1);
  } else {
    const double budget_ms = std::get<TimeBudget>(req.budget).ms;
    const std::uint64_t probe = 16;
    const auto c0 = std::chrono::steady_clock::now();
    (void)detail::anneal_once(m, probe, derive_seed(req.seed, 0xca11b7a7e), 1, false);
    const double per_sweep =
        std::max(1e-6, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - c0).count() /
                           static_cast<double>(probe));
    total_sweeps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(budget_ms / per_sweep));
  }
  const std::uint64_t per_restart = std::max<std::uint64_t>(1, total_sweeps / static_cast<std::uint64_t>(restarts));

  std::vector<detail::RestartOutcome> outcomes(static_cast<std::size_t>(restarts));
  auto run_one = [&](int r) {
    return detail::anneal_once(m, per_restart, derive_seed(req.seed, static_cast<std::uint64_t>(r)), pool_size,
                               req.verify_incremental);
  };
  if (req.parallel_restarts && restarts > 1) {
    std::vector<std::future<detail::RestartOutcome>> futs;
    for (int r = 0; r < restarts; ++r) futs.push_back(std::async(std::launch::async, run_one, r));
    for (int r = 0; r < restarts; ++r) outcomes[static_cast<std::size_t>(r)] = futs[static_cast<std::size_t>(r)].get();
  } else {
    for (int r = 0; r < restarts; ++r) outcomes[static_cast<std::size_t>(r)] = run_one(r);
  }

  std::vector<Candidate> all;
  SolveStats stats;
  for (auto& o : outcomes) {
    stats.verified_flips += o.verified;
    for (auto& c : o.pool) all.push_back(std::move(c));
  }
  stats.sweeps = per_restart * static_cast<std::uint64_t>(restarts);
  stats.restarts = restarts;
  SolveResult r = detail::finalize(m, std::move(all), pool_size, stats);
  r.stats.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

class SimulatedAnnealingSolver final : public QuboSolver {
 public:
  SolveResult solve(const SolveRequest& req) override { return solve_sa(req); }
  std::string name() const override { return "sa"; }
};

class ExhaustiveSolver final : public QuboSolver {
 public:
  SolveResult solve(const SolveRequest& req) override { return solve_exhaustive(req); }
  std::string name() const override { return "exhaustive"; }
};

}  // namespace kqa
