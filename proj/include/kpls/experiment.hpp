/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_EXPERIMENT_HPP_
#define KPLS_EXPERIMENT_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "kpls/cg.hpp"
#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/krylov.hpp"
#include "kpls/monitor.hpp"
#include "kpls/population.hpp"

namespace kpls {

enum class StoppingRule { rule1, rule2 };

inline const char* to_string(StoppingRule r) {
  return r == StoppingRule::rule1 ? "rule1" : "rule2";
}

struct ExperimentConfig {
  StoppingRule rule = StoppingRule::rule1;
  double gamma = 0.25;          ///< rule-1 exponent
  double nu = 0.25;             ///< rule-2 exponent
  std::vector<Eigen::Index> n_list = {100, 400, 1600};
  int reps = 50;
  std::uint64_t seed = 1;
  int m_max = 100;
};

struct ExperimentRow {
  Eigen::Index n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  int chosen_m = 0;
  double l2_err = 0.0;  ///< weighted L2 distance to f_bar on the grid
};

struct ExperimentSummary {
  Eigen::Index n = 0;
  double median_m = 0.0;
  double median_err = 0.0;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentSummary> medians;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) {
    throw ParameterError("median of an empty sample");
  }
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  if (v.size() % 2 == 1) return v[k];
  return 0.5 * (v[k - 1] + v[k]);
}

/// Rep r at the j-th sample size gets stream seed + r p1 + j p2; rows stay
/// reproducible independently of evaluation order.
inline std::uint64_t stream_seed(std::uint64_t master, int rep,
                                 std::size_t n_index) {
  return master + std::uint64_t(rep) * 15485863ull +
         std::uint64_t(n_index) * 982451653ull;
}

}  // namespace detail

/*!
 * \brief Learning-curve experiment against the exact population model.
 *
 * For every sample size and rep: draw a dataset, run the configured stopping
 * rule, evaluate the estimate on the grid (raw response scale) and record
 * the weighted L2 distance to f_bar. Medians per sample size summarize the
 * trend. Fully deterministic given the master seed.
 */
inline ExperimentTable consistency_experiment(const PopulationModel& model,
                                              const ExperimentConfig& cfg) {
  validate(model);
  if (cfg.reps < 1) {
    throw ParameterError("consistency_experiment: reps must be >= 1");
  }
  if (cfg.n_list.empty()) {
    throw ParameterError("consistency_experiment: empty n list");
  }

  ExperimentTable table;
  for (std::size_t j = 0; j < cfg.n_list.size(); ++j) {
    const Eigen::Index n = cfg.n_list[j];
    std::vector<double> errs;
    std::vector<double> ms;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t s = detail::stream_seed(cfg.seed, rep, j);
      const Dataset data = sample(model, n, s);
      const int budget =
          std::min<int>(cfg.m_max, static_cast<int>(data.n()));

      int chosen = 0;
      RkhsElement g;
      if (cfg.rule == StoppingRule::rule1) {
        Rule1Result r = stopping_rule_1(data, model.kernel, cfg.gamma, budget);
        chosen = r.chosen_m;
        g = r.g;
      } else {
        Rule2Result r = stopping_rule_2(data, model.kernel, cfg.nu, budget);
        chosen = r.chosen_m;
        g = r.g;
      }

      const Eigen::VectorXd fitted =
          predict(data, model.kernel, g, model.grid);
      const double err = l2_error(model.weights, model.f_bar, fitted);
      table.rows.push_back({n, rep, s, chosen, err});
      errs.push_back(err);
      ms.push_back(static_cast<double>(chosen));
    }
    table.medians.push_back(
        {n, detail::median(ms), detail::median(errs)});
  }
  return table;
}

}  // namespace kpls

#endif  // KPLS_EXPERIMENT_HPP_
