#pragma once

// Self-check suite run by `kqa oracle-check`: each property is compared
// against an independent brute-force computation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kqa/encoding.hpp"
#include "kqa/kernel_surrogate.hpp"
#include "kqa/qubo.hpp"
#include "kqa/random.hpp"
#include "kqa/solver.hpp"

namespace kqa {

inline Bits random_bits(std::size_t d, Rng& rng) {
  Bits b(d);
  for (auto& v : b) v = coin(rng) ? 1 : 0;
  return b;
}

/// Symmetric model with coefficients uniform in [-1, 1].
inline QuboModel random_qubo(std::size_t dim, Rng& rng) {
  Eigen::MatrixXd Q(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd q(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    q(i) = uniform_real(rng, -1.0, 1.0);
    for (Eigen::Index j = 0; j <= i; ++j) Q(i, j) = Q(j, i) = uniform_real(rng, -1.0, 1.0);
  }
  return QuboModel(std::move(Q), std::move(q));
}

/// (K + lambda I)^-1 for both kernels, by LU on the explicitly built Gram matrices.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> direct_inverses(const std::vector<Bits>& X, double gamma,
                                                                    double lambda) {
  const auto n = static_cast<Eigen::Index>(X.size());
  Eigen::MatrixXd Km(n, n), Ks(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Ks(i, j) = k_sigma(X[i], X[j], gamma);
      Km(i, j) = k_mu(X[i], X[j], gamma);
    }
  Km.diagonal().array() += lambda;
  Ks.diagonal().array() += lambda;
  return {Km.partialPivLu().inverse(), Ks.partialPivLu().inverse()};
}

struct OracleResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct OracleOptions {
  std::uint64_t seed = 7;
  int n_datasets = 20;
  int n_states = 20;
  int n_sa_models = 50;
  std::uint64_t sa_sweeps = 10000;
  double sa_threshold = 0.95;
  bool corrupt_L_mu = false;  // test hook: perturb one entry after growth
};

inline OracleResult check_incremental_inverse(const OracleOptions& o) {
  Rng rng(derive_seed(o.seed, 11));
  double worst = 0.0;
  for (int t = 0; t < o.n_datasets; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 59), d = 2 + uniform_index(rng, 99);
    const double gamma = static_cast<double>(t % 2), lambda = (t / 2) % 2 ? 1e-3 : 1.0;
    std::vector<Bits> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      X.push_back(random_bits(d, rng));
      y.push_back(uniform_real(rng, -1.0, 1.0));
    }
    auto s = SurrogateState::fit_initial({X.front()}, std::span(y).first(1), {gamma, lambda});
    for (std::size_t i = 1; i < n; ++i) s.append_sample(X[i], y[i]);
    if (o.corrupt_L_mu && t == 0) s.corrupt_L_mu_for_testing(0, 0, 1e-3);
    const auto [Lm, Ls] = direct_inverses(X, gamma, lambda);
    worst = std::max({worst, (s.L_mu() - Lm).cwiseAbs().maxCoeff(), (s.L_sigma() - Ls).cwiseAbs().maxCoeff()});
  }
  std::ostringstream d;
  d << "max abs deviation " << worst << " (tolerance 1e-8)";
  return {"incremental inverse vs direct inverse", worst <= 1e-8, d.str()};
}

inline OracleResult check_kernel_expansion(const OracleOptions& o) {
  Rng rng(derive_seed(o.seed, 12));
  double worst = 0.0;
  for (int t = 0; t < o.n_states; ++t) {
    const std::size_t n = 5 + uniform_index(rng, 20), d = 3 + uniform_index(rng, 20);
    const double gamma = static_cast<double>(t % 2);
    std::vector<Bits> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      X.push_back(random_bits(d, rng));
      y.push_back(uniform_real(rng, -1.0, 1.0));
    }
    const auto s = SurrogateState::fit_initial(X, y, {gamma, 1.0});
    const QuboModel mu = s.assemble_mu(), sg = s.assemble_sigma();
    for (int k = 0; k < 20; ++k) {
      const Bits x = random_bits(d, rng);
      Eigen::VectorXd ks(static_cast<Eigen::Index>(n));
      double f = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        f += s.c_hat()(j) * k_mu(X[j], x, gamma);
        ks(j) = k_sigma(X[j], x, gamma);
      }
      const double radicand = k_sigma(x, x, gamma) - ks.dot(s.L_sigma() * ks);
      worst = std::max(worst, std::abs(evaluate(mu.without_constant(), x) - (f - s.c_mu())));
      worst = std::max(worst, std::abs(evaluate(sg.without_constant(), x) + s.c_sigma() - radicand));
    }
  }
  std::ostringstream d;
  d << "max deviation " << worst << " (tolerance 1e-8)";
  return {"assembled QUBOs vs kernel expansion", worst <= 1e-8, d.str()};
}

inline OracleResult check_sa_vs_exhaustive(const OracleOptions& o) {
  Rng rng(derive_seed(o.seed, 13));
  int hits = 0;
  for (int t = 0; t < o.n_sa_models; ++t) {
    SolveRequest req;
    req.model = random_qubo(16, rng);
    req.seed = rng();
    req.budget = SweepBudget{o.sa_sweeps};
    const double exact = solve_exhaustive(req).best_energy;
    const double sa = solve_sa(req).best_energy;
    if (sa <= exact + 1e-9 * std::max(1.0, std::abs(exact))) ++hits;
  }
  const double rate = static_cast<double>(hits) / o.n_sa_models;
  std::ostringstream d;
  d << "success rate " << rate << " (" << hits << "/" << o.n_sa_models << ", threshold " << o.sa_threshold << ")";
  return {"annealer vs exhaustive on 16-bit models", rate >= o.sa_threshold, d.str()};
}

inline OracleResult check_encoding_round_trip(const OracleOptions& o) {
  Rng rng(derive_seed(o.seed, 14));
  bool ok = true;
  std::string why;
  for (std::size_t n_bins : {61u, 301u}) {
    const auto space = build_space(std::vector<VariableSpec>(5, VariableSpec::real(-3.0, 3.0, n_bins)));
    const SpaceCodec codec(space);
    const auto& disc = *codec.discretization_of(0);
    const double half = 0.5 * *disc.step;
    for (std::size_t i = 0; i < n_bins && ok; ++i) {
      std::vector<double> x(5, disc.grid[i]);
      if (codec.decode(codec.encode(x)) != x) ok = false, why = "grid value does not round-trip";
    }
    for (int k = 0; k < 2000 && ok; ++k) {
      std::vector<double> x(5);
      for (auto& v : x) v = uniform_real(rng, -3.0, 3.0);
      const auto back = codec.decode(codec.encode(x));
      for (std::size_t v = 0; v < 5; ++v)
        if (std::abs(back[v] - x[v]) > half * (1.0 + 1e-12)) ok = false, why = "quantization error above half a step";
    }
    for (int k = 0; k < 200 && ok; ++k) {
      const auto back = codec.decode(random_bits(space.total_bits, rng));
      for (double v : back)
        if (!(v >= -3.0 && v <= 3.0)) ok = false, why = "decode of an invalid wall left the grid";
    }
  }
  return {"domain-wall encode/decode round trip", ok, ok ? "grid values exact, error within half a step" : why};
}

inline std::vector<OracleResult> run_oracles(const OracleOptions& o) {
  return {check_incremental_inverse(o), check_kernel_expansion(o), check_sa_vs_exhaustive(o),
          check_encoding_round_trip(o)};
}

}  // namespace kqa
