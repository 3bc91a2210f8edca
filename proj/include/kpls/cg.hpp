/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_CG_HPP_
#define KPLS_CG_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/kernel.hpp"
#include "kpls/rkhs.hpp"

namespace kpls {

/// Relative breakdown threshold on the curvature <d, S d> against ||d||^2.
inline constexpr double kTauBreakdown = 1e-12;

/// A curvature this far below the run's peak marks an exhausted search
/// space; further steps only amplify roundoff.
inline constexpr double kTauExhausted = 1e-10;

namespace detail {

/// Default iteration budget: min(n, 100) unless the caller overrides.
inline int default_m_max(Eigen::Index n, int m_max) {
  if (m_max > 0) return m_max;
  return static_cast<int>(std::min<Eigen::Index>(n, 100));
}

}  // namespace detail

/// Why iterating stopped in a given trace.
enum class ExitReason { max_iter, exact_fit, breakdown };

inline const char* to_string(ExitReason r) {
  switch (r) {
    case ExitReason::max_iter:
      return "max_iter";
    case ExitReason::exact_fit:
      return "exact_fit";
    case ExitReason::breakdown:
      return "breakdown";
  }
  return "unknown";
}

/*!
 * \brief State entering iteration m plus the scalars iteration m produced.
 *
 * g, u, d, u_norm2 and ls_error describe the iterate itself. d_norm2,
 * d_curvature, alpha and beta stay NaN until the loop body for this index has
 * run; a trace's last record therefore carries NaNs there.
 */
struct CgIteration {
  int m = 0;
  RkhsElement g;
  RkhsElement u;
  RkhsElement d;
  double u_norm2 = 0.0;    ///< ||u_m||^2 in the function space
  double ls_error = 0.0;   ///< weighted squared residual of g_m
  double d_norm2 = std::numeric_limits<double>::quiet_NaN();
  double d_curvature = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
};

/// Full iteration history; iterations[m] is the record of iterate m.
struct CgTrace {
  std::vector<CgIteration> iterations;
  ExitReason exit_reason = ExitReason::max_iter;

  /// Number of completed update steps (the last iterate's index).
  int steps() const { return static_cast<int>(iterations.size()) - 1; }
  const CgIteration& last() const { return iterations.back(); }
  const RkhsElement& final_g() const { return iterations.back().g; }
};

/*!
 * \brief Conjugate gradients on the normal equation S g = T* y, one step at a
 * time.
 *
 * Starts from g_0 = 0 with u_0 = d_0 = T* y and applies the standard
 * recursion: alpha_m = ||u_m||^2 / <d_m, S d_m>, g_{m+1} = g_m + alpha_m d_m,
 * u_{m+1} = u_m - alpha_m S d_m, beta_m = ||u_{m+1}||^2 / ||u_m||^2,
 * d_{m+1} = u_{m+1} + beta_m d_m. Each step costs two Gram multiplies.
 *
 * step() refuses to run once the residual is below the fit threshold
 * (exact_fit) or the curvature collapses, against ||d||^2 or against the
 * largest curvature seen so far (breakdown); the caller owns the iteration
 * budget. The context must outlive the engine.
 */
class CgEngine {
 public:
  CgEngine(const OperatorContext& ctx, const Eigen::VectorXd& targets)
      : ctx_(ctx), y_(targets) {
    if (targets.size() != ctx.size()) {
      throw DimensionError("CgEngine: target vector has size " +
                           std::to_string(targets.size()) +
                           ", context has " + std::to_string(ctx.size()));
    }
    const RkhsElement u0 = tstar_apply(ctx_, y_);
    CgIteration it0;
    it0.m = 0;
    it0.g = zero_element(ctx_);
    it0.u = u0;
    it0.d = u0;
    it0.u_norm2 = u0.coeffs.dot(ctx_.gram() * u0.coeffs);
    it0.ls_error = l2_inner(ctx_, y_, y_);
    fitted_ = Eigen::VectorXd::Zero(ctx_.size());
    tau_fit_ = 1e-14 * (it0.u_norm2 + 1.0);
    trace_.iterations.push_back(std::move(it0));
  }

  /// Runs one loop iteration. Returns false without a new iterate when an
  /// exit condition holds; the trace keeps whichever scalars were computed.
  bool step() {
    if (exited_) return false;
    CgIteration& cur = trace_.iterations.back();

    if (cur.u_norm2 <= tau_fit_) {
      finish(ExitReason::exact_fit);
      return false;
    }

    const Eigen::VectorXd gd = ctx_.gram() * cur.d.coeffs;
    cur.d_norm2 = cur.d.coeffs.dot(gd);
    cur.d_curvature = ctx_.weights().cwiseProduct(gd).dot(gd);
    if (cur.d_curvature <= kTauBreakdown * cur.d_norm2 ||
        cur.d_curvature <= kTauExhausted * curvature_peak_) {
      finish(ExitReason::breakdown);
      return false;
    }
    curvature_peak_ = std::max(curvature_peak_, cur.d_curvature);

    cur.alpha = cur.u_norm2 / cur.d_curvature;

    CgIteration next;
    next.m = cur.m + 1;
    next.g = {cur.g.coeffs + cur.alpha * cur.d.coeffs, ctx_.id()};
    next.u = {cur.u.coeffs -
                  cur.alpha * ctx_.weights().cwiseProduct(gd),
              ctx_.id()};
    next.u_norm2 = next.u.coeffs.dot(ctx_.gram() * next.u.coeffs);

    cur.beta = next.u_norm2 / cur.u_norm2;
    next.d = {next.u.coeffs + cur.beta * cur.d.coeffs, ctx_.id()};

    fitted_ += cur.alpha * gd;
    next.ls_error = l2_inner(ctx_, y_ - fitted_, y_ - fitted_);

    trace_.iterations.push_back(std::move(next));
    return true;
  }

  bool exited() const { return exited_; }
  const CgTrace& trace() const { return trace_; }
  const OperatorContext& context() const { return ctx_; }

  /// Marks a trace that stopped because the caller's budget ran out.
  CgTrace take_trace() {
    if (!exited_) trace_.exit_reason = ExitReason::max_iter;
    return std::move(trace_);
  }

 private:
  void finish(ExitReason r) {
    exited_ = true;
    trace_.exit_reason = r;
  }

  const OperatorContext& ctx_;
  Eigen::VectorXd y_;
  Eigen::VectorXd fitted_;  ///< T g_m at the context points
  CgTrace trace_;
  double tau_fit_ = 0.0;
  double curvature_peak_ = 0.0;
  bool exited_ = false;
};

/// Runs the recursion for up to m_max steps on an existing context.
inline CgTrace fit_cg(
    const OperatorContext& ctx, const Eigen::VectorXd& targets, int m_max,
    const std::function<void(const CgTrace&)>& on_iteration = nullptr) {
  if (m_max < 1) {
    throw ParameterError("fit_cg: m_max must be at least 1, got " +
                         std::to_string(m_max));
  }
  CgEngine engine(ctx, targets);
  for (int m = 0; m < m_max; ++m) {
    if (!engine.step()) break;
    if (on_iteration) on_iteration(engine.trace());
  }
  return engine.take_trace();
}

/// Builds the empirical context for a dataset and runs the recursion.
inline CgTrace fit_cg(
    const Dataset& data, const KernelSpec& spec, int m_max,
    const std::function<void(const CgTrace&)>& on_iteration = nullptr) {
  const OperatorContext ctx =
      OperatorContext::empirical(gram_matrix(spec, data.x));
  return fit_cg(ctx, data.y, m_max, on_iteration);
}

/// Predictions on new points in the raw response scale.
inline Eigen::VectorXd predict(const Dataset& data, const KernelSpec& spec,
                               const RkhsElement& g,
                               const Eigen::MatrixXd& x_new) {
  const Eigen::VectorXd centered = evaluate(g, data.x, spec, x_new);
  return (centered.array() * data.y_scale + data.y_mean).matrix();
}

/*!
 * \brief Dimension of the search space spanned by the first m directions.
 *
 * The directions are normalized in the function space, so the rank judgment
 * of their Gram matrix (eigenvalues above 1e-10 of the largest) does not
 * depend on their scale. Directions with negligible norm are skipped.
 */
inline int krylov_basis_dim(const OperatorContext& ctx, const CgTrace& trace,
                            int m) {
  if (m < 0 || m > trace.steps() + 1 ||
      m > static_cast<int>(trace.iterations.size())) {
    throw ParameterError("krylov_basis_dim: m = " + std::to_string(m) +
                         " outside the trace's range");
  }
  if (m == 0) return 0;

  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < m; ++i) {
    const RkhsElement& d = trace.iterations[i].d;
    check_element(ctx, d, "krylov_basis_dim");
    const double norm = h_norm(ctx, d);
    if (norm > 0.0) dirs.push_back(d.coeffs / norm);
  }
  if (dirs.empty()) return 0;

  const int k = static_cast<int>(dirs.size());
  Eigen::MatrixXd gram(k, k);
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd gdi = ctx.gram() * dirs[i];
    for (int j = i; j < k; ++j) {
      gram(i, j) = dirs[j].dot(gdi);
      gram(j, i) = gram(i, j);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i] > 1e-10 * top) ++rank;
  }
  return rank;
}

}  // namespace kpls

#endif  // KPLS_CG_HPP_
