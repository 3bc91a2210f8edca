/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_RKHS_HPP_
#define KPLS_RKHS_HPP_

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "kpls/errors.hpp"
#include "kpls/kernel.hpp"

namespace kpls {

/*!
 * \brief Discrete measure + Gram matrix pair all operator algebra runs on.
 *
 * The state space is a finite point set with Gram matrix G and a weight per
 * point. Function-space elements are kernel expansions g = sum_i c_i k(x_i, .)
 * stored by coefficient vector. Under weights w the evaluation map T sends g
 * to its value vector G c, its adjoint T* sends a value vector v to the
 * expansion with coefficients w .* v, and the covariance operator S = T* T
 * acts on coefficients as c -> w .* (G c). The empirical measure uses
 * w_i = 1/n, a population grid uses its point masses; with k <= 1 on the
 * support and total mass <= 1 this normalization keeps ||S|| <= 1.
 *
 * Elements remember the context that created them by id; mixing elements
 * across contexts is a ContextError even when the matrices agree by value.
 */
class OperatorContext {
 public:
  /// Uniform weights 1/n: the n-sample empirical measure.
  static OperatorContext empirical(Eigen::MatrixXd gram) {
    const Eigen::Index n = gram.rows();
    return OperatorContext(std::move(gram),
                           Eigen::VectorXd::Constant(n, 1.0 / double(n)));
  }

  /// Arbitrary nonnegative point masses (finite population grids).
  static OperatorContext weighted(Eigen::MatrixXd gram,
                                  Eigen::VectorXd weights) {
    return OperatorContext(std::move(gram), std::move(weights));
  }

  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return gram_.rows(); }
  std::uint64_t id() const { return id_; }

 private:
  OperatorContext(Eigen::MatrixXd gram, Eigen::VectorXd weights)
      : gram_(std::move(gram)), weights_(std::move(weights)), id_(next_id()) {
    if (gram_.rows() != gram_.cols()) {
      throw DimensionError("operator context needs a square Gram matrix");
    }
    if (gram_.rows() < 1) {
      throw DimensionError("operator context needs at least one point");
    }
    if (weights_.size() != gram_.rows()) {
      throw DimensionError("operator context has " +
                           std::to_string(gram_.rows()) + " points but " +
                           std::to_string(weights_.size()) + " weights");
    }
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
        throw ParameterError("weight " + std::to_string(i) +
                             " is not a finite nonnegative number");
      }
    }
  }

  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }

  Eigen::MatrixXd gram_;
  Eigen::VectorXd weights_;
  std::uint64_t id_;
};

/// Kernel expansion over a context's point set, stored by coefficients.
struct RkhsElement {
  Eigen::VectorXd coeffs;
  std::uint64_t context_id = 0;
};

inline void check_element(const OperatorContext& ctx, const RkhsElement& g,
                          const char* where) {
  if (g.context_id != ctx.id()) {
    throw ContextError(std::string(where) +
                       ": element belongs to context " +
                       std::to_string(g.context_id) + ", not " +
                       std::to_string(ctx.id()));
  }
  if (g.coeffs.size() != ctx.size()) {
    throw DimensionError(std::string(where) + ": element has " +
                         std::to_string(g.coeffs.size()) +
                         " coefficients for a context of size " +
                         std::to_string(ctx.size()));
  }
}

inline RkhsElement zero_element(const OperatorContext& ctx) {
  return {Eigen::VectorXd::Zero(ctx.size()), ctx.id()};
}

/// T* v: the expansion with coefficients w .* v.
inline RkhsElement tstar_apply(const OperatorContext& ctx,
                               const Eigen::VectorXd& v) {
  if (v.size() != ctx.size()) {
    throw DimensionError("tstar_apply: value vector has size " +
                         std::to_string(v.size()) + ", context has " +
                         std::to_string(ctx.size()));
  }
  return {ctx.weights().cwiseProduct(v), ctx.id()};
}

/// T g: values of the expansion at the context points, G c.
inline Eigen::VectorXd t_apply(const OperatorContext& ctx,
                               const RkhsElement& g) {
  check_element(ctx, g, "t_apply");
  return ctx.gram() * g.coeffs;
}

/// S g = T* T g: coefficients w .* (G c).
inline RkhsElement apply_S(const OperatorContext& ctx, const RkhsElement& g) {
  check_element(ctx, g, "apply_S");
  return {ctx.weights().cwiseProduct(ctx.gram() * g.coeffs), ctx.id()};
}

/// Function-space inner product <g, h> = c_g' G c_h.
inline double h_inner(const OperatorContext& ctx, const RkhsElement& g,
                      const RkhsElement& h) {
  check_element(ctx, g, "h_inner");
  check_element(ctx, h, "h_inner");
  return g.coeffs.dot(ctx.gram() * h.coeffs);
}

/// Function-space norm; the quadratic form is clamped at zero before the
/// square root so PSD roundoff cannot produce a NaN.
inline double h_norm(const OperatorContext& ctx, const RkhsElement& g) {
  return std::sqrt(std::max(0.0, h_inner(ctx, g, g)));
}

/// Weighted inner product of value vectors, sum_i w_i a_i b_i.
inline double l2_inner(const OperatorContext& ctx, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b) {
  if (a.size() != ctx.size() || b.size() != ctx.size()) {
    throw DimensionError("l2_inner: value vectors must match context size " +
                         std::to_string(ctx.size()));
  }
  return ctx.weights().cwiseProduct(a).dot(b);
}

inline double l2_norm(const OperatorContext& ctx, const Eigen::VectorXd& a) {
  return std::sqrt(std::max(0.0, l2_inner(ctx, a, a)));
}

/*!
 * \brief Evaluates an expansion at arbitrary new points.
 *
 * x_train must be the point set the element's coefficients refer to. The new
 * points are rows of x_new; with x_new = x_train this reduces to G c.
 */
inline Eigen::VectorXd evaluate(const RkhsElement& g,
                                const Eigen::MatrixXd& x_train,
                                const KernelSpec& spec,
                                const Eigen::MatrixXd& x_new) {
  if (g.coeffs.size() != x_train.rows()) {
    throw DimensionError("evaluate: element has " +
                         std::to_string(g.coeffs.size()) +
                         " coefficients for " + std::to_string(x_train.rows()) +
                         " training points");
  }
  return cross_gram(spec, x_new, x_train) * g.coeffs;
}

/*!
 * \brief Function-space distance between expansions over two point sets.
 *
 * Both expansions live in the same space as long as the kernel agrees, so
 * ||g - h||^2 expands into three kernel quadratic forms with the cross term
 * over the rectangular kernel matrix of the two point sets.
 */
inline double cross_h_distance(const KernelSpec& spec,
                               const Eigen::MatrixXd& x1,
                               const Eigen::VectorXd& c1,
                               const Eigen::MatrixXd& x2,
                               const Eigen::VectorXd& c2) {
  if (c1.size() != x1.rows() || c2.size() != x2.rows()) {
    throw DimensionError("cross_h_distance: coefficient/point count mismatch");
  }
  const double own1 = c1.dot(gram_matrix(spec, x1) * c1);
  const double own2 = c2.dot(gram_matrix(spec, x2) * c2);
  const double cross = c1.dot(cross_gram(spec, x1, x2) * c2);
  return std::sqrt(std::max(0.0, own1 - 2.0 * cross + own2));
}

}  // namespace kpls

#endif  // KPLS_RKHS_HPP_
