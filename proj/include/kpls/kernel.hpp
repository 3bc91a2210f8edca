/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_KERNEL_HPP_
#define KPLS_KERNEL_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "kpls/errors.hpp"

namespace kpls {

enum class KernelFamily { gaussian, linear, polynomial };

/*!
 * \brief Positive semi-definite kernel description.
 *
 * Every shipped family satisfies k(x, x) <= 1 on its admissible domain:
 * the gaussian everywhere, the linear and polynomial families on the closed
 * unit ball. That bound is what keeps the sample covariance operator's norm
 * at most one, so gram_matrix() enforces it on the diagonal for the families
 * that do not satisfy it globally. Callers feeding the linear or polynomial
 * kernel are expected to scale their inputs into the unit ball beforehand.
 */
class KernelSpec {
 public:
  static KernelSpec gaussian(double sigma) {
    if (!(sigma > 0.0)) {
      throw ParameterError("gaussian kernel requires sigma > 0, got " +
                           std::to_string(sigma));
    }
    return KernelSpec(KernelFamily::gaussian, sigma, 0);
  }

  static KernelSpec linear() { return KernelSpec(KernelFamily::linear, 0.0, 0); }

  static KernelSpec polynomial(int degree) {
    if (degree < 1) {
      throw ParameterError("polynomial kernel requires degree >= 1, got " +
                           std::to_string(degree));
    }
    return KernelSpec(KernelFamily::polynomial, 0.0, degree);
  }

  KernelFamily family() const { return family_; }
  double sigma() const { return sigma_; }
  int degree() const { return degree_; }

  /// True when k(x, x) <= 1 needs a domain restriction (unit ball) rather
  /// than holding globally.
  bool needs_unit_ball() const { return family_ != KernelFamily::gaussian; }

  std::string name() const {
    switch (family_) {
      case KernelFamily::gaussian:
        return "gaussian";
      case KernelFamily::linear:
        return "linear";
      case KernelFamily::polynomial:
        return "polynomial";
    }
    return "unknown";
  }

 private:
  KernelSpec(KernelFamily family, double sigma, int degree)
      : family_(family), sigma_(sigma), degree_(degree) {}

  KernelFamily family_;
  double sigma_;
  int degree_;
};

/// Evaluates k(x, y) for a single pair of points.
inline double eval_kernel(const KernelSpec& spec,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) {
    throw DimensionError("kernel arguments have sizes " +
                         std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  switch (spec.family()) {
    case KernelFamily::gaussian: {
      const double s2 = spec.sigma() * spec.sigma();
      return std::exp(-(x - y).squaredNorm() / (2.0 * s2));
    }
    case KernelFamily::linear:
      return x.dot(y);
    case KernelFamily::polynomial:
      return std::pow((x.dot(y) + 1.0) / 2.0, spec.degree());
  }
  throw ParameterError("unhandled kernel family");
}

namespace detail {

// Slack on the unit-ball diagonal check; pure roundoff, not a domain widening.
inline constexpr double kDiagSlack = 1e-12;

inline void check_diag_bound(const Eigen::VectorXd& diag,
                             const KernelSpec& spec) {
  if (!spec.needs_unit_ball()) return;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (diag[i] > 1.0 + kDiagSlack) {
      throw BoundsError(spec.name() + " kernel needs inputs in the unit ball; "
                        "k(x_" + std::to_string(i) + ", x_" +
                        std::to_string(i) + ") = " + std::to_string(diag[i]));
    }
  }
}

}  // namespace detail

/*!
 * \brief Dense Gram matrix G with G(i, j) = k(x_i, x_j), rows of X are points.
 *
 * The upper triangle is computed and mirrored, so the result is exactly
 * symmetric. For the unit-ball families the diagonal is checked against 1
 * (tiny roundoff slack) and a BoundsError identifies the first offending row.
 */
inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec,
                                   const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n < 1) {
    throw DimensionError("gram_matrix needs at least one point");
  }
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = eval_kernel(spec, x.row(i).transpose(),
                                   x.row(j).transpose());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  detail::check_diag_bound(g.diagonal(), spec);
  return g;
}

/// Rectangular kernel matrix C with C(i, j) = k(a_i, b_j).
inline Eigen::MatrixXd cross_gram(const KernelSpec& spec,
                                  const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("cross_gram point sets have dimensions " +
                         std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()));
  }
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      c(i, j) = eval_kernel(spec, a.row(i).transpose(), b.row(j).transpose());
    }
  }
  return c;
}

}  // namespace kpls

#endif  // KPLS_KERNEL_HPP_
