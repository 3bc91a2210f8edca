/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_KRYLOV_HPP_
#define KPLS_KRYLOV_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kpls/cg.hpp"
#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/kernel.hpp"
#include "kpls/rkhs.hpp"

namespace kpls {

/// Relative eigenvalue threshold below which a moment matrix counts as
/// singular.
inline constexpr double kTauSingular = 1e-12;

/*!
 * \brief Krylov moment matrices of the normal equation at order m.
 *
 * The columns are R_i = S^{i-1} T* y for i = 1..m. M' collects their
 * function-space inner products <R_i, R_j>, M the curvature products
 * <R_i, S R_j>. Spectral norms come from exact symmetric eigendecompositions;
 * when M's smallest eigenvalue falls to 1e-12 of its largest the bundle is
 * flagged singular and ||M^-1|| is +infinity.
 */
struct KrylovBundle {
  int m = 0;
  std::vector<RkhsElement> columns;
  Eigen::MatrixXd m_prime;
  Eigen::MatrixXd m_mat;
  Eigen::VectorXd m_eigenvalues;  ///< ascending, from the symmetric solver
  double norm_m_prime = 0.0;      ///< spectral norm of M'
  double norm_m_inv =
      std::numeric_limits<double>::infinity();  ///< ||M^-1||, +inf if singular
  bool singular = true;
};

namespace detail {

/// Grows the moment matrices one order at a time; column i+1 reuses the Gram
/// product of column i, so order m costs m multiplies total.
class KrylovBuilder {
 public:
  KrylovBuilder(const OperatorContext& ctx, const Eigen::VectorXd& targets)
      : ctx_(ctx) {
    if (targets.size() != ctx.size()) {
      throw DimensionError("KrylovBuilder: target vector has size " +
                           std::to_string(targets.size()) +
                           ", context has " + std::to_string(ctx.size()));
    }
    next_coeffs_ = ctx_.weights().cwiseProduct(targets);
  }

  /// Appends column m+1 and the new row/column of both moment matrices.
  void grow() {
    const Eigen::VectorXd c = next_coeffs_;
    const Eigen::VectorXd gc = ctx_.gram() * c;
    coeffs_.push_back(c);
    gram_products_.push_back(gc);
    next_coeffs_ = ctx_.weights().cwiseProduct(gc);

    const int m = static_cast<int>(coeffs_.size());
    m_prime_.conservativeResize(m, m);
    m_mat_.conservativeResize(m, m);
    for (int i = 0; i < m; ++i) {
      const double inner = coeffs_[i].dot(gram_products_[m - 1]);
      m_prime_(i, m - 1) = inner;
      m_prime_(m - 1, i) = inner;
      const double curv =
          ctx_.weights().cwiseProduct(gram_products_[i]).dot(
              gram_products_[m - 1]);
      m_mat_(i, m - 1) = curv;
      m_mat_(m - 1, i) = curv;
    }
  }

  int order() const { return static_cast<int>(coeffs_.size()); }

  KrylovBundle bundle() const {
    KrylovBundle b;
    b.m = order();
    b.columns.reserve(coeffs_.size());
    for (const Eigen::VectorXd& c : coeffs_) {
      b.columns.push_back({c, ctx_.id()});
    }
    b.m_prime = m_prime_;
    b.m_mat = m_mat_;

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(m_prime_);
    b.norm_m_prime = es_p.eigenvalues().cwiseAbs().maxCoeff();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_m(m_mat_);
    b.m_eigenvalues = es_m.eigenvalues();
    const double lo = b.m_eigenvalues[0];
    const double hi = b.m_eigenvalues[b.m - 1];
    b.singular = !(lo > kTauSingular * std::max(hi, 0.0)) || !(hi > 0.0);
    b.norm_m_inv = b.singular ? std::numeric_limits<double>::infinity()
                              : 1.0 / lo;
    return b;
  }

  /// Right-hand side <R_i, T* y>; T* y is the first column.
  Eigen::VectorXd rhs() const {
    const int m = order();
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = coeffs_[0].dot(gram_products_[i]);
    return r;
  }

  const OperatorContext& ctx() const { return ctx_; }

 private:
  const OperatorContext& ctx_;
  std::vector<Eigen::VectorXd> coeffs_;         ///< coefficient vectors of R_i
  std::vector<Eigen::VectorXd> gram_products_;  ///< G times each of them
  Eigen::VectorXd next_coeffs_;
  Eigen::MatrixXd m_prime_{0, 0};
  Eigen::MatrixXd m_mat_{0, 0};
};

}  // namespace detail

/// Builds the order-m bundle in one call.
inline KrylovBundle build_krylov(const OperatorContext& ctx,
                                 const Eigen::VectorXd& targets, int m) {
  if (m < 1) {
    throw ParameterError("build_krylov: m must be at least 1, got " +
                         std::to_string(m));
  }
  detail::KrylovBuilder builder(ctx, targets);
  for (int i = 0; i < m; ++i) builder.grow();
  return builder.bundle();
}

inline KrylovBundle build_krylov(const Dataset& data, const KernelSpec& spec,
                                 int m) {
  const OperatorContext ctx =
      OperatorContext::empirical(gram_matrix(spec, data.x));
  return build_krylov(ctx, data.y, m);
}

/*!
 * \brief Closed-form minimizer over the order-m subspace.
 *
 * The weighted least-squares minimizer over span{R_1..R_m} is
 * R (M)^-1 R^adj T* y, realized through the eigendecomposition of M.
 * Requires a nonsingular bundle.
 */
inline RkhsElement closed_form_g(const OperatorContext& ctx,
                                 const Eigen::VectorXd& targets,
                                 const KrylovBundle& bundle) {
  if (bundle.singular) {
    throw SingularError("closed_form_g: moment matrix is singular at order " +
                        std::to_string(bundle.m));
  }
  if (targets.size() != ctx.size()) {
    throw DimensionError("closed_form_g: target vector has size " +
                         std::to_string(targets.size()) + ", context has " +
                         std::to_string(ctx.size()));
  }
  const int m = bundle.m;
  Eigen::VectorXd rhs(m);
  const Eigen::VectorXd tstar_y = ctx.weights().cwiseProduct(targets);
  const Eigen::VectorXd g_tstar_y = ctx.gram() * tstar_y;
  for (int i = 0; i < m; ++i) {
    check_element(ctx, bundle.columns[i], "closed_form_g");
    rhs[i] = bundle.columns[i].coeffs.dot(g_tstar_y);
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bundle.m_mat);
  const Eigen::VectorXd w =
      es.eigenvectors() *
      (es.eigenvectors().transpose() * rhs).cwiseQuotient(es.eigenvalues());

  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(ctx.size());
  for (int i = 0; i < m; ++i) coeffs += w[i] * bundle.columns[i].coeffs;
  return {coeffs, ctx.id()};
}

/*!
 * \brief Complexity m (max(||M'||, 1/m) ||M^-1||)^2, +infinity when singular.
 */
inline double complexity(const KrylovBundle& bundle) {
  if (bundle.singular) return std::numeric_limits<double>::infinity();
  const double level =
      std::max(bundle.norm_m_prime, 1.0 / static_cast<double>(bundle.m));
  const double prod = level * bundle.norm_m_inv;
  return static_cast<double>(bundle.m) * prod * prod;
}

struct ComplexityRow {
  int m = 0;
  double complexity = 0.0;
  bool singular = false;
};

struct Rule2Result {
  int chosen_m = 0;
  RkhsElement g;
  double threshold = 0.0;  ///< n^nu
  std::vector<ComplexityRow> rows;
  CgTrace trace;  ///< recursion run to chosen_m (only the zero iterate if 0)
};

/*!
 * \brief Early stopping by subspace complexity (rule 2).
 *
 * Stops at the first order m whose complexity reaches n^nu and outputs m - 1;
 * a singular bundle has infinite complexity and always stops. If no order up
 * to min(m_max, n) trips the threshold the cap itself is chosen. The
 * estimate is the recursion's iterate at the chosen order.
 */
inline Rule2Result stopping_rule_2(const OperatorContext& ctx,
                                   const Eigen::VectorXd& targets,
                                   Eigen::Index n_rate, double nu,
                                   int m_max = 0) {
  if (!(nu > 0.0) || !(nu < 0.5)) {
    throw ParameterError("stopping_rule_2: nu must lie in (0, 1/2)");
  }
  const int budget = std::min<int>(detail::default_m_max(ctx.size(), m_max),
                                   static_cast<int>(ctx.size()));

  Rule2Result out;
  out.threshold = std::pow(static_cast<double>(n_rate), nu);

  detail::KrylovBuilder builder(ctx, targets);
  int chosen = budget;
  for (int m = 1; m <= budget; ++m) {
    builder.grow();
    const KrylovBundle b = builder.bundle();
    const double c = complexity(b);
    out.rows.push_back({m, c, b.singular});
    if (c >= out.threshold) {
      chosen = m - 1;
      break;
    }
  }
  out.chosen_m = chosen;

  if (chosen == 0) {
    out.g = zero_element(ctx);
    CgEngine engine(ctx, targets);
    out.trace = engine.take_trace();
  } else {
    out.trace = fit_cg(ctx, targets, chosen);
    out.g = out.trace.final_g();
  }
  return out;
}

/// Dataset-level entry point; the empirical measure supplies the rate n.
inline Rule2Result stopping_rule_2(const Dataset& data, const KernelSpec& spec,
                                   double nu = 0.25, int m_max = 0) {
  const OperatorContext ctx =
      OperatorContext::empirical(gram_matrix(spec, data.x));
  return stopping_rule_2(ctx, data.y, data.n(), nu, m_max);
}

}  // namespace kpls

#endif  // KPLS_KRYLOV_HPP_
