/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_POPULATION_HPP_
#define KPLS_POPULATION_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kpls/cg.hpp"
#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/kernel.hpp"
#include "kpls/rkhs.hpp"

namespace kpls {

enum class NoiseKind { none, bounded_uniform };

/*!
 * \brief Finite-support data distribution with known regression function.
 *
 * X is drawn from at most a few hundred grid points with the given masses,
 * Y = f_bar(X) plus bounded noise. Everything the algorithm estimates is
 * exactly computable here: the covariance operator is an N x N matrix, its
 * eigenfunctions come from one symmetric eigendecomposition, and the L2
 * error of any estimate is a finite weighted sum.
 */
struct PopulationModel {
  Eigen::MatrixXd grid;     ///< N x d support points
  Eigen::VectorXd weights;  ///< point masses, nonnegative, sum 1
  Eigen::VectorXd f_bar;    ///< regression function at the grid
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  NoiseKind noise = NoiseKind::none;
  double half_width = 0.0;  ///< uniform noise range under bounded_uniform

  Eigen::Index size() const { return grid.rows(); }
  Eigen::Index dim() const { return grid.cols(); }
};

/// Checks the model invariants; throws ParameterError or BoundsError.
inline void validate(const PopulationModel& model) {
  const Eigen::Index n = model.size();
  if (n < 1 || n > 200) {
    throw ParameterError("population grid must have 1..200 points, has " +
                         std::to_string(n));
  }
  if (model.weights.size() != n || model.f_bar.size() != n) {
    throw DimensionError("population model fields disagree on grid size");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(model.weights[i] >= 0.0)) {
      throw ParameterError("population weight " + std::to_string(i) +
                           " is negative");
    }
    total += model.weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError("population weights sum to " +
                         std::to_string(total) + ", expected 1");
  }
  const double hw =
      model.noise == NoiseKind::bounded_uniform ? model.half_width : 0.0;
  if (hw < 0.0) {
    throw ParameterError("noise half width must be nonnegative");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(model.f_bar[i]) + hw > 1.0) {
      throw BoundsError("response range exceeds [-1, 1] at grid point " +
                        std::to_string(i));
    }
  }
}

/// 20 equispaced points on [-1, 1], uniform masses, gaussian sigma = 0.5,
/// f(x) = 0.8 sin(3x) exp(-x^2) clipped to +-0.9, uniform noise +-0.1.
inline PopulationModel default_oracle_model() {
  const Eigen::Index n = 20;
  PopulationModel m;
  m.grid.resize(n, 1);
  m.weights = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  m.f_bar.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * double(i) / double(n - 1);
    m.grid(i, 0) = x;
    const double f = 0.8 * std::sin(3.0 * x) * std::exp(-x * x);
    m.f_bar[i] = std::clamp(f, -0.9, 0.9);
  }
  m.kernel = KernelSpec::gaussian(0.5);
  m.noise = NoiseKind::bounded_uniform;
  m.half_width = 0.1;
  return m;
}

/// Weighted L2 distance between two value vectors on the grid.
inline double l2_error(const Eigen::VectorXd& weights,
                       const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  if (f.size() != weights.size() || g.size() != weights.size()) {
    throw DimensionError("l2_error: value vectors must match the grid size");
  }
  const Eigen::VectorXd diff = f - g;
  return std::sqrt(std::max(0.0, weights.cwiseProduct(diff).dot(diff)));
}

/*!
 * \brief Spectral data of the population covariance operator.
 *
 * Diagonalizes W^{1/2} G W^{1/2} (symmetric, same spectrum as the covariance
 * operator) and back-transforms eigenvectors to grid eigenfunctions
 * phi_i = W^{-1/2} v_i, orthonormal in the weighted L2 product. Zero-weight
 * points carry no mass, so positive-eigenvalue eigenvectors vanish there and
 * the back-transform pins phi to 0 at such points. Eigenvalues below 1e-12
 * of the largest count as null; their count defines the operator rank.
 */
class PopulationOps {
 public:
  explicit PopulationOps(const PopulationModel& model)
      : model_(model), ctx_(checked_context(model)) {
    const Eigen::Index n = model_.size();
    const Eigen::VectorXd root_w = model_.weights.cwiseSqrt();
    const Eigen::MatrixXd sym =
        root_w.asDiagonal() * ctx_.gram() * root_w.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);

    // Reorder descending so component m is the m-th largest.
    eigenvalues_.resize(n);
    eigenfunctions_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index src = n - 1 - i;
      eigenvalues_[i] = es.eigenvalues()[src];
      for (Eigen::Index p = 0; p < n; ++p) {
        eigenfunctions_(p, i) =
            model_.weights[p] > 0.0
                ? es.eigenvectors()(p, src) / root_w[p]
                : 0.0;
      }
    }
    const double top = std::max(eigenvalues_[0], 0.0);
    rank_ = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (eigenvalues_[i] > 1e-12 * top && eigenvalues_[i] > 0.0) ++rank_;
    }
    f_coeffs_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      f_coeffs_[i] =
          model_.weights.cwiseProduct(model_.f_bar).dot(eigenfunctions_.col(i));
    }
  }

  const PopulationModel& model() const { return model_; }
  const OperatorContext& ctx() const { return ctx_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  int rank() const { return rank_; }

  /// Values of the m-th eigenfunction (descending order) at the grid.
  Eigen::VectorXd eigenfunction(int i) const {
    if (i < 0 || i >= model_.size()) {
      throw ParameterError("eigenfunction index out of range");
    }
    return eigenfunctions_.col(i);
  }

  /// Projection of f onto the top-m eigenfunctions; for m >= rank this is
  /// the projection onto the operator's range closure.
  Eigen::VectorXd pca_truncation(int m) const {
    if (m < 0 || m > model_.size()) {
      throw ParameterError("pca_truncation: m = " + std::to_string(m) +
                           " outside 0.." + std::to_string(model_.size()));
    }
    const int take = std::min(m, rank_);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model_.size());
    for (int i = 0; i < take; ++i) {
      out += f_coeffs_[i] * eigenfunctions_.col(i);
    }
    return out;
  }

  /// P f: the full range projection of the regression function.
  Eigen::VectorXd projection_f() const { return pca_truncation(rank_); }

 private:
  static OperatorContext checked_context(const PopulationModel& model) {
    validate(model);
    return OperatorContext::weighted(gram_matrix(model.kernel, model.grid),
                                     model.weights);
  }

  PopulationModel model_;
  OperatorContext ctx_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenfunctions_;  ///< columns are phi_i at the grid
  Eigen::VectorXd f_coeffs_;        ///< <f_bar, phi_i> weighted
  int rank_ = 0;
};

/// Population run of the recursion plus each iterate's grid values.
struct PopulationTrace {
  CgTrace cg;
  std::vector<Eigen::VectorXd> f_values;  ///< f_bar_m at the grid, per iterate
};

/*!
 * \brief Runs the recursion on the exact population operators.
 *
 * Same algorithm, same code path; only the context differs (grid weights
 * instead of 1/n, f_bar instead of noisy responses).
 */
inline PopulationTrace population_cg(const OperatorContext& ctx,
                                     const PopulationModel& model, int m_max) {
  if (m_max < 1 || m_max > model.size()) {
    throw ParameterError("population_cg: m_max must lie in 1..N");
  }
  PopulationTrace out;
  out.cg = fit_cg(ctx, model.f_bar, m_max);
  out.f_values.reserve(out.cg.iterations.size());
  for (const CgIteration& it : out.cg.iterations) {
    out.f_values.push_back(ctx.gram() * it.g.coeffs);
  }
  return out;
}

inline PopulationTrace population_cg(const PopulationModel& model, int m_max) {
  validate(model);
  const OperatorContext ctx = OperatorContext::weighted(
      gram_matrix(model.kernel, model.grid), model.weights);
  return population_cg(ctx, model, m_max);
}

namespace detail {

/// Deterministic uniform variates; the state update is the standard 64-bit
/// Mersenne twister, the output map keeps 53 bits.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

/*!
 * \brief Draws n observations from the model; deterministic per seed.
 *
 * Grid indices come from inverse-CDF lookup on the cumulative masses,
 * responses add uniform noise in [-half_width, half_width]. The result is
 * preprocessed under the reject policy; the model invariant keeps raw
 * responses inside [-1, 1], so rejection would indicate a fault.
 */
inline Dataset sample(const PopulationModel& model, Eigen::Index n,
                      std::uint64_t seed) {
  validate(model);
  if (n < 2) {
    throw ParameterError("sample: need n >= 2 draws");
  }
  const Eigen::Index grid_n = model.size();
  std::vector<double> cdf(static_cast<std::size_t>(grid_n));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < grid_n; ++i) {
    acc += model.weights[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  cdf.back() = 1.0;

  detail::UniformSource rng(seed);
  Eigen::MatrixXd x(n, model.dim());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.next();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const Eigen::Index idx =
        std::min<Eigen::Index>(grid_n - 1, it - cdf.begin());
    x.row(i) = model.grid.row(idx);
    double noise = 0.0;
    if (model.noise == NoiseKind::bounded_uniform) {
      noise = (2.0 * rng.next() - 1.0) * model.half_width;
    }
    y[i] = model.f_bar[idx] + noise;
  }
  return preprocess(x, y, ClipPolicy::reject);
}

/// One comparison row: recursion iterate vs spectral truncation, both
/// measured against the range projection of f_bar.
struct DominanceRow {
  int m = 0;
  double cg_error = 0.0;
  double pca_error = 0.0;
};

struct DominanceReport {
  std::vector<DominanceRow> rows;
  int violations = 0;  ///< rows with cg_error > pca_error + 1e-10
};

/*!
 * \brief Checks that the recursion's population iterate never trails the
 * spectral truncation of the same order.
 *
 * Both errors are taken against P f_bar in the weighted L2 norm, for every
 * order the recursion reached.
 */
inline DominanceReport dominance_check(const PopulationModel& model,
                                       int m_max) {
  const PopulationOps ops(model);
  const PopulationTrace tr = population_cg(ops.ctx(), model, m_max);
  const Eigen::VectorXd pf = ops.projection_f();

  DominanceReport rep;
  for (std::size_t m = 0; m < tr.f_values.size(); ++m) {
    DominanceRow row;
    row.m = static_cast<int>(m);
    row.cg_error = l2_error(model.weights, pf, tr.f_values[m]);
    row.pca_error =
        l2_error(model.weights, pf, ops.pca_truncation(row.m));
    if (row.cg_error > row.pca_error + 1e-10) ++rep.violations;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace kpls

#endif  // KPLS_POPULATION_HPP_
