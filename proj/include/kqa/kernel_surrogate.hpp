#pragma once

// Polynomial-kernel ridge regression surrogate and its QUBO form.
//
// Mean model:  k_mu(a, b)    = (a.b + gamma)^2,  c_hat = (K_mu + lambda I)^-1 y
//              f_mu(x)       = x^T Q_mu x + 2 gamma q_mu^T x + c_mu
//              Q_mu = sum_i c_i x_i x_i^T,  q_mu = sum_i c_i x_i,  c_mu = gamma^2 sum_i c_i
// Spread model: k_sigma(a, b) = a.b + gamma,  L = (K_sigma + lambda I)^-1
//              f_sigma(x)    = k_sigma(x,x) - k^T L k
//                            = x^T (I - X^T L X) x - 2 gamma (X^T L 1)^T x + c_sigma
//              c_sigma = gamma - gamma^2 1^T L 1
//
// Both inverses are grown one row/column at a time with the bordered-inverse
// identity, so appending a sample costs O(n^2) instead of a refactorization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kqa/problem.hpp"
#include "kqa/qubo.hpp"

namespace kqa {

struct KernelConfig {
  double gamma = 0.0;
  double lambda = 1.0;
};

namespace detail {
inline double dot_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernel: length mismatch");
  std::size_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<std::size_t>(a[i] & b[i]);
  return static_cast<double>(s);
}

inline Eigen::VectorXd to_vector(std::span<const std::uint8_t> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i] ? 1.0 : 0.0;
  return v;
}

inline void symmetrize_from_lower(Eigen::MatrixXd& m) {
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose().triangularView<Eigen::StrictlyUpper>();
}
}  // namespace detail

inline double k_mu(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, double gamma) {
  const double t = detail::dot_bits(a, b) + gamma;
  return t * t;
}

inline double k_sigma(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, double gamma) {
  return detail::dot_bits(a, b) + gamma;
}

class NumericalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SurrogateState {
 public:
  /// Direct construction from an initial dataset (dense LDLT inverses).
  static SurrogateState fit_initial(const std::vector<Bits>& X, std::span<const double> y, KernelConfig cfg) {
    if (X.empty() || X.size() != y.size()) throw std::invalid_argument("fit_initial: need |X| = |y| >= 1");
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("fit_initial: lambda must be positive");
    const std::size_t d = X.front().size();
    for (const auto& x : X)
      if (x.size() != d) throw std::invalid_argument("fit_initial: inputs have different lengths");
    for (double v : y)
      if (!std::isfinite(v)) throw std::invalid_argument("fit_initial: non-finite target");

    SurrogateState s;
    s.cfg_ = cfg;
    const auto n = static_cast<Eigen::Index>(X.size());
    s.X_.resize(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i) s.X_.row(i) = detail::to_vector(X[static_cast<std::size_t>(i)]).transpose();
    s.y_ = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

    s.G_ = s.X_ * s.X_.transpose();
    const Eigen::MatrixXd Ks = (s.G_.array() + cfg.gamma).matrix();
    const Eigen::MatrixXd Km = Ks.array().square().matrix();
    s.L_mu_ = regularized_inverse(Km, cfg.lambda);
    s.L_sigma_ = regularized_inverse(Ks, cfg.lambda);
    s.c_hat_ = s.L_mu_ * s.y_;
    return s;
  }

  /// Grows both inverses by one sample via the bordered-inverse identity.
  void append_sample(std::span<const std::uint8_t> x, double y) {
    if (x.size() != dim()) throw std::invalid_argument("append_sample: input length mismatch");
    if (!std::isfinite(y)) throw std::invalid_argument("append_sample: non-finite target");
    const Eigen::VectorXd xv = detail::to_vector(x);
    const Eigen::VectorXd g = X_ * xv;
    const double gxx = xv.sum();

    const Eigen::VectorXd b_sigma = (g.array() + cfg_.gamma).matrix();
    const Eigen::VectorXd b_mu = b_sigma.array().square().matrix();
    const double g0 = cfg_.gamma, lam = cfg_.lambda;
    grow(
        L_mu_, b_mu, (gxx + g0) * (gxx + g0) + lam,
        [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
          return (G_.array() + g0).square().matrix() * v + lam * v;
        },
        "mu");
    grow(
        L_sigma_, b_sigma, gxx + g0 + lam,
        [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return (G_.array() + g0).matrix() * v + lam * v; },
        "sigma");

    const Eigen::Index n = X_.rows();
    G_.conservativeResize(n + 1, n + 1);
    G_.block(0, n, n, 1) = g;
    G_.block(n, 0, 1, n) = g.transpose();
    G_(n, n) = gxx;
    X_.conservativeResize(n + 1, Eigen::NoChange);
    X_.row(n) = xv.transpose();
    y_.conservativeResize(n + 1);
    y_(n) = y;
    c_hat_ = L_mu_ * y_;
  }

  const KernelConfig& config() const { return cfg_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const Eigen::MatrixXd& L_mu() const { return L_mu_; }
  const Eigen::MatrixXd& L_sigma() const { return L_sigma_; }
  const Eigen::VectorXd& c_hat() const { return c_hat_; }
  /// Smallest Schur complement seen by append_sample (infinity before any append).
  double min_schur() const { return min_schur_; }

  Bits input(std::size_t i) const {
    Bits b(dim());
    for (std::size_t j = 0; j < dim(); ++j) b[j] = X_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0;
    return b;
  }

  /// Constant dropped from the assembled mean model.
  double c_mu() const { return cfg_.gamma * cfg_.gamma * c_hat_.sum(); }
  /// Constant dropped from the assembled spread model.
  double c_sigma() const { return cfg_.gamma - cfg_.gamma * cfg_.gamma * L_sigma_.sum(); }

  /// Mean model as a QUBO; the constant c_mu is recorded but not part of the objective.
  QuboModel assemble_mu() const {
    Eigen::MatrixXd Q = X_.transpose() * (X_.array().colwise() * c_hat_.array()).matrix();
    detail::symmetrize_from_lower(Q);
    Eigen::VectorXd q = 2.0 * cfg_.gamma * (X_.transpose() * c_hat_);
    return QuboModel(std::move(Q), std::move(q), 0.0);
  }

  QuboModel assemble_sigma() const {
    const auto d = X_.cols();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(d, d) - X_.transpose() * (L_sigma_ * X_);
    detail::symmetrize_from_lower(Q);
    Eigen::VectorXd q = -2.0 * cfg_.gamma * (X_.transpose() * L_sigma_.rowwise().sum());
    return QuboModel(std::move(Q), std::move(q), 0.0);
  }

  /// Lower-confidence-bound acquisition f_mu - beta f_sigma.
  QuboModel acquisition(double beta) const {
    if (!(beta >= 0.0)) throw std::invalid_argument("acquisition: beta must be non-negative");
    QuboModel mu = assemble_mu();
    if (beta == 0.0) return mu;
    return add_scaled(mu, assemble_sigma(), -beta);
  }

  /// Full mean prediction including c_mu.
  double predict_mu(std::span<const std::uint8_t> x) const {
    if (x.size() != dim()) throw std::invalid_argument("predict_mu: length mismatch");
    const Eigen::VectorXd t = ((X_ * detail::to_vector(x)).array() + cfg_.gamma).matrix();
    return c_hat_.dot(t.cwiseAbs2());
  }

  /// Test hook: perturbs one entry of L_mu so oracle checks can be shown to fire.
  void corrupt_L_mu_for_testing(std::size_t i, std::size_t j, double delta) {
    L_mu_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += delta;
  }

 private:
  static Eigen::MatrixXd regularized_inverse(const Eigen::MatrixXd& K, double lambda) {
    const auto n = K.rows();
    Eigen::MatrixXd A = K;
    A.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw NumericalDegeneracy("fit_initial: factorization failed");
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    inv = 0.5 * (inv + inv.transpose()).eval();
    return inv;
  }

  // [[M, b], [b^T, d]]^-1 = [[M^-1 + u u^T / s, -u / s], [-u^T / s, 1 / s]]
  // with u = M^-1 b and s = d - b^T u. When M is ill-conditioned, s is a
  // small difference of large terms, so u gets one refinement step against
  // the exact M (rebuilt from the integer Gram matrix) before s is formed.
  template <class ApplyM>
  void grow(Eigen::MatrixXd& L, const Eigen::VectorXd& b, double d, ApplyM apply_M, const char* which) {
    const Eigen::Index n = L.rows();
    Eigen::VectorXd u = L * b;
    const Eigen::VectorXd r = b - apply_M(u);
    u.noalias() += L * r;
    const double s = d - b.dot(u);
    if (!(s > 1e-12) || !std::isfinite(s))
      throw NumericalDegeneracy(std::string("append_sample: Schur complement ") + std::to_string(s) + " for " + which +
                                " kernel at n=" + std::to_string(n));
    min_schur_ = std::min(min_schur_, s);
    L.conservativeResize(n + 1, n + 1);
    L.topLeftCorner(n, n).noalias() += (u / s) * u.transpose();
    L.block(0, n, n, 1) = -u / s;
    L.block(n, 0, 1, n) = (-u / s).transpose();
    L(n, n) = 1.0 / s;
    detail::symmetrize_from_lower(L);
  }

  KernelConfig cfg_;
  Eigen::MatrixXd X_;  // n x d, rows are the stored binary inputs
  Eigen::MatrixXd G_;  // X X^T, integer valued and therefore exact
  Eigen::VectorXd y_;
  Eigen::MatrixXd L_mu_;
  Eigen::MatrixXd L_sigma_;
  Eigen::VectorXd c_hat_;
  double min_schur_ = std::numeric_limits<double>::infinity();
};

/// Value-returning form of SurrogateState::append_sample.
inline SurrogateState append_sample(SurrogateState state, std::span<const std::uint8_t> x, double y) {
  state.append_sample(x, y);
  return state;
}

/// Keeps the assembled mean matrix across appends and adds only the
/// c_hat-delta weighted outer products: Q += X^T diag(c_new - c_old) X.
class IncrementalMuAssembler {
 public:
  QuboModel update(const SurrogateState& s) {
    const auto n = static_cast<Eigen::Index>(s.size());
    const auto d = static_cast<Eigen::Index>(s.dim());
    if (Q_.rows() != d || c_prev_.size() > n) {
      Q_ = Eigen::MatrixXd::Zero(d, d);
      c_prev_.resize(0);
    }
    Eigen::VectorXd delta = s.c_hat();
    delta.head(c_prev_.size()) -= c_prev_;
    Q_.noalias() += s.inputs().transpose() * (s.inputs().array().colwise() * delta.array()).matrix();
    detail::symmetrize_from_lower(Q_);
    c_prev_ = s.c_hat();
    Eigen::VectorXd q = 2.0 * s.config().gamma * (s.inputs().transpose() * s.c_hat());
    return QuboModel(Q_, std::move(q), 0.0);
  }

 private:
  Eigen::MatrixXd Q_;
  Eigen::VectorXd c_prev_;
};

/// Pearson correlation between training targets and mean predictions.
/// Returns nullopt when fewer than two samples or either side is constant.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) return std::nullopt;
  double ma = 0.0, mb = 0.0, scale_a = 0.0, scale_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
    scale_a = std::max(scale_a, std::abs(a[i]));
    scale_b = std::max(scale_b, std::abs(b[i]));
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double tiny_a = 1e-24 * scale_a * scale_a * static_cast<double>(n);
  const double tiny_b = 1e-24 * scale_b * scale_b * static_cast<double>(n);
  if (!(saa > tiny_a) || !(sbb > tiny_b)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline std::optional<double> training_correlation(const SurrogateState& s) {
  std::vector<double> pred(s.size()), y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    pred[i] = s.predict_mu(s.input(i));
    y[i] = s.targets()(static_cast<Eigen::Index>(i));
  }
  return pearson(pred, y);
}

}  // namespace kqa
