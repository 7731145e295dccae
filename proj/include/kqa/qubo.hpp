#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kqa/problem.hpp"

namespace kqa {

/// x^T Q x + q^T x + constant over binary x, with Q stored dense and exactly
/// symmetric. The constant is carried for diagnostics and never sent to a
/// solver.
class QuboModel {
 public:
  QuboModel() = default;
  explicit QuboModel(std::size_t dim)
      : quadratic_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
        linear_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

  QuboModel(Eigen::MatrixXd quadratic, Eigen::VectorXd linear, double constant = 0.0)
      : quadratic_(std::move(quadratic)), linear_(std::move(linear)), constant_(constant) {
    if (quadratic_.rows() != quadratic_.cols() || quadratic_.rows() != linear_.size())
      throw std::invalid_argument("QuboModel: inconsistent dimensions");
    for (Eigen::Index i = 0; i < quadratic_.rows(); ++i)
      for (Eigen::Index j = i + 1; j < quadratic_.cols(); ++j)
        if (quadratic_(i, j) != quadratic_(j, i)) throw std::invalid_argument("QuboModel: quadratic matrix is not symmetric");
    if (!quadratic_.allFinite() || !linear_.allFinite() || !std::isfinite(constant_))
      throw std::invalid_argument("QuboModel: non-finite coefficient");
  }

  std::size_t dim() const { return static_cast<std::size_t>(linear_.size()); }
  const Eigen::MatrixXd& quadratic() const { return quadratic_; }
  const Eigen::VectorXd& linear() const { return linear_; }
  double constant() const { return constant_; }

  /// Adds coef * x_i * x_j to the objective, split evenly across (i,j) and (j,i).
  void add_pair(std::size_t i, std::size_t j, double coef) {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
    if (a == b) {
      quadratic_(a, a) += coef;
    } else {
      quadratic_(a, b) += 0.5 * coef;
      quadratic_(b, a) = quadratic_(a, b);
    }
  }
  void add_linear(std::size_t i, double coef) { linear_(static_cast<Eigen::Index>(i)) += coef; }
  void set_constant(double c) { constant_ = c; }

  QuboModel without_constant() const {
    QuboModel m = *this;
    m.constant_ = 0.0;
    return m;
  }

 private:
  Eigen::MatrixXd quadratic_;
  Eigen::VectorXd linear_;
  double constant_ = 0.0;
};

inline double evaluate(const QuboModel& m, std::span<const std::uint8_t> x) {
  if (x.size() != m.dim()) throw std::invalid_argument("evaluate: length mismatch");
  std::vector<Eigen::Index> ones;
  ones.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) ones.push_back(static_cast<Eigen::Index>(i));
  const auto& Q = m.quadratic();
  double e = 0.0;
  for (auto i : ones) {
    double row = 0.0;
    for (auto j : ones) row += Q(i, j);
    e += row + m.linear()(i);
  }
  return e + m.constant();
}

/// a + s * b, coefficient-wise (constants included).
inline QuboModel add_scaled(const QuboModel& a, const QuboModel& b, double s) {
  if (a.dim() != b.dim()) throw std::invalid_argument("add_scaled: dimension mismatch");
  if (s == 0.0) return a;
  // Elementwise on two exactly symmetric inputs, so the result stays exactly symmetric.
  Eigen::MatrixXd Q = a.quadratic() + s * b.quadratic();
  return QuboModel(std::move(Q), a.linear() + s * b.linear(), a.constant() + s * b.constant());
}

inline double max_abs_coefficient(const QuboModel& m) {
  if (m.dim() == 0) return 0.0;
  return std::max(m.quadratic().cwiseAbs().maxCoeff(), m.linear().cwiseAbs().maxCoeff());
}

struct QuboTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
  friend bool operator==(const QuboTerm&, const QuboTerm&) = default;
};

/// Upper-triangular export, sorted by (i, j) with i <= j: diagonal entries
/// as stored, off-diagonal entries doubled (the weight on x_i x_j). Exact
/// zeros are omitted.
inline std::vector<QuboTerm> upper_triangular_terms(const QuboModel& m) {
  std::vector<QuboTerm> out;
  const auto& Q = m.quadratic();
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    for (Eigen::Index j = i; j < Q.cols(); ++j) {
      const double v = (i == j) ? Q(i, i) : 2.0 * Q(i, j);
      if (v != 0.0) out.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), v});
    }
  return out;
}

/// Inverse of upper_triangular_terms. Repeated (i, j) pairs accumulate.
inline QuboModel from_upper_triangular(std::size_t dim, const std::vector<QuboTerm>& terms,
                                       std::span<const double> linear, double constant = 0.0) {
  if (linear.size() != dim) throw std::invalid_argument("from_upper_triangular: linear length mismatch");
  QuboModel m(dim);
  for (const auto& t : terms) {
    if (t.i > t.j || t.j >= dim) throw std::invalid_argument("from_upper_triangular: bad term index");
    m.add_pair(t.i, t.j, t.value);
  }
  for (std::size_t i = 0; i < dim; ++i) m.add_linear(i, linear[i]);
  m.set_constant(constant);
  return m;
}

/// Moves the diagonal into the linear part (x_i^2 = x_i on binary inputs).
inline QuboModel canonicalize(const QuboModel& m) {
  Eigen::MatrixXd Q = m.quadratic();
  Eigen::VectorXd q = m.linear() + Q.diagonal();
  Q.diagonal().setZero();
  return QuboModel(std::move(Q), std::move(q), m.constant());
}

}  // namespace kqa
