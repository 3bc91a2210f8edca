/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_MONITOR_HPP_
#define KPLS_MONITOR_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kpls/cg.hpp"
#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/kernel.hpp"

namespace kpls {

/*!
 * \brief Error propagation for a product: x y perturbed by dx, dy.
 *
 * |x y - (x +- dx)(y +- dy)| <= x dy + y dx + dx dy. All inputs must be
 * nonnegative.
 */
inline double xi(double x, double y, double dx, double dy) {
  if (x < 0.0 || y < 0.0 || dx < 0.0 || dy < 0.0) {
    throw ParameterError("xi needs nonnegative arguments");
  }
  return x * dy + y * dx + dx * dy;
}

/// First-order variant of xi without the dx dy cross term.
inline double xi_prime(double x, double y, double dx, double dy) {
  if (x < 0.0 || y < 0.0 || dx < 0.0 || dy < 0.0) {
    throw ParameterError("xi_prime needs nonnegative arguments");
  }
  return x * dy + y * dx;
}

/*!
 * \brief Error propagation for a reciprocal: |1/x - 1/(x - dx)| over [dx, 0].
 *
 * Defined only while the perturbation cannot cross zero, so the result is
 * empty unless x > dx >= 0.
 */
inline std::optional<double> zeta(double x, double dx) {
  if (dx < 0.0) throw ParameterError("zeta needs dx >= 0");
  if (!(x > dx)) return std::nullopt;
  return dx / (x * (x - dx));
}

/// Sampling-error scale 4 sqrt(ln n / n); defined for n >= 2, peaks at n = 3.
inline double epsilon_n(Eigen::Index n) {
  if (n < 2) {
    throw ParameterError("epsilon_n needs n >= 2, got " + std::to_string(n));
  }
  const double nd = static_cast<double>(n);
  return 4.0 * std::sqrt(std::log(nd) / nd);
}

/*!
 * \brief Accumulated perturbation bounds after m iterations.
 *
 * delta_g, delta_u, delta_d bound how far the computed iterate, residual and
 * direction can sit from their ideal counterparts when every inner product
 * the recursion consumed was off by at most eps_n. The eps fields keep the
 * intermediate bounds of the transition that produced this state (eps4 is
 * the current ||u_m||^2 bound, carried forward). defined flips to false when
 * a reciprocal bound's precondition fails, after which no further state can
 * be derived.
 */
struct MonitorState {
  int m = 0;
  bool defined = true;
  double eps_n = 0.0;
  double delta_g = 0.0;
  double delta_u = 0.0;
  double delta_d = 0.0;
  double delta_alpha = std::numeric_limits<double>::quiet_NaN();
  double delta_beta = std::numeric_limits<double>::quiet_NaN();
  double eps1 = std::numeric_limits<double>::quiet_NaN();
  double eps2 = std::numeric_limits<double>::quiet_NaN();
  double eps3 = std::numeric_limits<double>::quiet_NaN();
  double eps4 = std::numeric_limits<double>::quiet_NaN();
  double eps5 = std::numeric_limits<double>::quiet_NaN();
};

/// State before any iteration: delta_g = 0, delta_u = delta_d = eps_n, and
/// the initial ||u_0||^2 bound eps4 = xi(||u_0||, ||u_0||, eps_n, eps_n).
inline MonitorState monitor_init(double u0_norm, double eps_n) {
  if (u0_norm < 0.0 || eps_n < 0.0) {
    throw ParameterError("monitor_init needs nonnegative norm and eps_n");
  }
  MonitorState s;
  s.m = 0;
  s.eps_n = eps_n;
  s.delta_g = 0.0;
  s.delta_u = eps_n;
  s.delta_d = eps_n;
  s.eps4 = xi(u0_norm, u0_norm, eps_n, eps_n);
  return s;
}

/*!
 * \brief Advances the bounds across one completed iteration.
 *
 * it must be the record whose loop body has run (alpha and beta set); the
 * next iterate's ||u||^2 closes the recursion. The update order follows the
 * recursion the bounds protect: direction-norm bound, curvature-reciprocal
 * bound (first exit point), alpha bound, the g and u accumulations, the
 * residual-reciprocal bound (second exit point), then the beta and d bounds.
 * A failed reciprocal precondition returns a state with defined = false that
 * keeps whatever accumulations were already computed.
 */
inline MonitorState monitor_step(const MonitorState& prev,
                                 const CgIteration& it, double u_next_norm2) {
  if (!prev.defined) {
    throw ParameterError("monitor_step: cannot advance an undefined state");
  }
  if (!std::isfinite(it.alpha) || !std::isfinite(it.beta) ||
      !std::isfinite(it.d_curvature) || !std::isfinite(it.d_norm2)) {
    throw ParameterError(
        "monitor_step: iteration record is missing its loop scalars");
  }
  if (u_next_norm2 < 0.0) {
    throw ParameterError("monitor_step: negative ||u||^2");
  }

  MonitorState s;
  s.m = prev.m + 1;
  s.eps_n = prev.eps_n;
  s.delta_g = prev.delta_g;
  s.delta_u = prev.delta_u;
  s.delta_d = prev.delta_d;

  const double d_norm = std::sqrt(std::max(0.0, it.d_norm2));
  const double u_norm2 = it.u_norm2;
  const double u_next_norm = std::sqrt(u_next_norm2);

  s.eps1 = xi_prime(d_norm, 1.0, prev.delta_d, prev.eps_n);
  s.eps2 = xi(d_norm, d_norm, prev.delta_d, s.eps1);
  const std::optional<double> e3 = zeta(it.d_curvature, s.eps2);
  if (!e3) {
    s.defined = false;
    return s;
  }
  s.eps3 = *e3;
  s.delta_alpha = xi(u_norm2, 1.0 / it.d_curvature, prev.eps4, s.eps3);
  s.delta_g = prev.delta_g + xi(it.alpha, d_norm, s.delta_alpha, prev.delta_d);
  s.delta_u = prev.delta_u + xi(it.alpha, d_norm, s.delta_alpha, s.eps1);
  const std::optional<double> e5 = zeta(u_norm2, prev.eps4);
  if (!e5) {
    s.defined = false;
    return s;
  }
  s.eps5 = *e5;
  s.eps4 = xi(u_next_norm, u_next_norm, s.delta_u, s.delta_u);
  s.delta_beta = xi(u_next_norm2, 1.0 / u_norm2, s.eps4, s.eps5);
  s.delta_d = prev.delta_d + xi(it.beta, d_norm, s.delta_beta, prev.delta_d);
  return s;
}

/// How a rule-1 run came to its answer.
enum class Rule1StopCause {
  monitor_exit,     ///< a reciprocal bound became undefined
  bound_exceeded,   ///< delta_g crossed n^-gamma
  cg_exit,          ///< the recursion itself stopped first
  reached_m_max     ///< iteration budget exhausted with bounds still valid
};

inline const char* to_string(Rule1StopCause c) {
  switch (c) {
    case Rule1StopCause::monitor_exit:
      return "monitor_exit";
    case Rule1StopCause::bound_exceeded:
      return "bound_exceeded";
    case Rule1StopCause::cg_exit:
      return "cg_exit";
    case Rule1StopCause::reached_m_max:
      return "reached_m_max";
  }
  return "unknown";
}

struct Rule1Result {
  int chosen_m = 0;
  RkhsElement g;
  double threshold = 0.0;  ///< n^-gamma
  Rule1StopCause cause = Rule1StopCause::reached_m_max;
  CgTrace trace;
  std::vector<MonitorState> monitor;  ///< states 0..last derivable
};

/*!
 * \brief Early stopping by perturbation bound (rule 1).
 *
 * Runs the recursion and the bound propagation in lockstep and stops at the
 * first index m+1 where either the propagation exits or delta_g exceeds
 * n^-gamma; the estimate is the last iterate with a valid bound, g_m. If the
 * recursion stops first the final iterate is kept as is. n_rate is the
 * sample size driving eps_n and the threshold; eps_override substitutes the
 * inner-product error scale (diagnostics only).
 */
inline Rule1Result stopping_rule_1(
    const OperatorContext& ctx, const Eigen::VectorXd& targets,
    Eigen::Index n_rate, double gamma, int m_max = 0,
    std::optional<double> eps_override = std::nullopt) {
  if (!(gamma > 0.0) || !(gamma < 0.5)) {
    throw ParameterError("stopping_rule_1: gamma must lie in (0, 1/2)");
  }
  const int budget = detail::default_m_max(ctx.size(), m_max);
  const double eps = eps_override ? *eps_override : epsilon_n(n_rate);
  if (eps < 0.0) {
    throw ParameterError("stopping_rule_1: eps_n override must be >= 0");
  }

  Rule1Result out;
  out.threshold = std::pow(static_cast<double>(n_rate), -gamma);

  CgEngine engine(ctx, targets);
  const double u0_norm = std::sqrt(std::max(0.0, engine.trace().last().u_norm2));
  out.monitor.push_back(monitor_init(u0_norm, eps));

  int valid_m = 0;
  out.cause = Rule1StopCause::reached_m_max;
  for (int m = 0; m < budget; ++m) {
    if (!engine.step()) {
      out.cause = Rule1StopCause::cg_exit;
      valid_m = engine.trace().steps();
      break;
    }
    const CgTrace& tr = engine.trace();
    const CgIteration& done = tr.iterations[m];
    const MonitorState next =
        monitor_step(out.monitor.back(), done, tr.iterations[m + 1].u_norm2);
    out.monitor.push_back(next);
    if (!next.defined) {
      out.cause = Rule1StopCause::monitor_exit;
      valid_m = m;
      break;
    }
    if (next.delta_g > out.threshold) {
      out.cause = Rule1StopCause::bound_exceeded;
      valid_m = m;
      break;
    }
    valid_m = m + 1;
  }

  out.trace = engine.take_trace();
  out.chosen_m = valid_m;
  out.g = out.trace.iterations[static_cast<std::size_t>(valid_m)].g;
  return out;
}

/// Dataset-level entry point; the empirical measure supplies both the
/// operator context and the rate n.
inline Rule1Result stopping_rule_1(
    const Dataset& data, const KernelSpec& spec, double gamma = 0.25,
    int m_max = 0, std::optional<double> eps_override = std::nullopt) {
  const OperatorContext ctx =
      OperatorContext::empirical(gram_matrix(spec, data.x));
  return stopping_rule_1(ctx, data.y, data.n(), gamma, m_max, eps_override);
}

}  // namespace kpls

#endif  // KPLS_MONITOR_HPP_
