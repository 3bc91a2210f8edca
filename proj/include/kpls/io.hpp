/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_IO_HPP_
#define KPLS_IO_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpls/cg.hpp"
#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/experiment.hpp"
#include "kpls/kernel.hpp"
#include "kpls/krylov.hpp"
#include "kpls/monitor.hpp"
#include "kpls/population.hpp"

namespace kpls {

inline constexpr int kModelSchemaVersion = 1;

namespace detail {

/// FNV-1a over the raw bytes of a double matrix, row-major walk.
inline std::uint64_t fnv1a64(const Eigen::MatrixXd& x) {
  std::uint64_t h = 14695981039346656037ull;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf);
}

/// Shortest decimal that round-trips a double; CSV cell format.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void set_if_finite(nlohmann::json& j, const char* key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

}  // namespace detail

inline nlohmann::json kernel_to_json(const KernelSpec& spec) {
  nlohmann::json j;
  j["family"] = spec.name();
  if (spec.family() == KernelFamily::gaussian) j["sigma"] = spec.sigma();
  if (spec.family() == KernelFamily::polynomial) j["degree"] = spec.degree();
  return j;
}

inline KernelSpec kernel_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) {
    throw IoError("kernel JSON needs a 'family' field");
  }
  const std::string family = j.at("family").get<std::string>();
  if (family == "gaussian") {
    if (!j.contains("sigma")) throw IoError("gaussian kernel JSON needs sigma");
    return KernelSpec::gaussian(j.at("sigma").get<double>());
  }
  if (family == "linear") return KernelSpec::linear();
  if (family == "polynomial") {
    if (!j.contains("degree")) {
      throw IoError("polynomial kernel JSON needs degree");
    }
    return KernelSpec::polynomial(j.at("degree").get<int>());
  }
  throw IoError("unknown kernel family '" + family + "'");
}

/// Per-iteration scalars of a trace; coefficient vectors stay out of the
/// summary, the chosen iterate's coefficients live at the model's top level.
inline nlohmann::json trace_to_json(const CgTrace& trace) {
  nlohmann::json j;
  j["exit_reason"] = to_string(trace.exit_reason);
  j["steps"] = trace.steps();
  nlohmann::json its = nlohmann::json::array();
  for (const CgIteration& it : trace.iterations) {
    nlohmann::json row;
    row["m"] = it.m;
    row["u_norm2"] = it.u_norm2;
    row["ls_error"] = it.ls_error;
    detail::set_if_finite(row, "d_norm2", it.d_norm2);
    detail::set_if_finite(row, "d_curvature", it.d_curvature);
    detail::set_if_finite(row, "alpha", it.alpha);
    detail::set_if_finite(row, "beta", it.beta);
    its.push_back(std::move(row));
  }
  j["iterations"] = std::move(its);
  return j;
}

inline nlohmann::json monitor_to_json(const std::vector<MonitorState>& states) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MonitorState& s : states) {
    nlohmann::json row;
    row["m"] = s.m;
    row["defined"] = s.defined;
    row["eps_n"] = s.eps_n;
    row["delta_g"] = s.delta_g;
    row["delta_u"] = s.delta_u;
    row["delta_d"] = s.delta_d;
    detail::set_if_finite(row, "delta_alpha", s.delta_alpha);
    detail::set_if_finite(row, "delta_beta", s.delta_beta);
    detail::set_if_finite(row, "eps1", s.eps1);
    detail::set_if_finite(row, "eps2", s.eps2);
    detail::set_if_finite(row, "eps3", s.eps3);
    detail::set_if_finite(row, "eps4", s.eps4);
    detail::set_if_finite(row, "eps5", s.eps5);
    arr.push_back(std::move(row));
  }
  return arr;
}

/// Everything predict needs, plus provenance of the fit.
struct FittedModel {
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  Eigen::MatrixXd x;         ///< training points the coefficients refer to
  Eigen::VectorXd coeffs;
  double y_mean = 0.0;
  double y_scale = 1.0;
  int chosen_m = 0;
  nlohmann::json rule;       ///< rule kind + parameters + stop cause
  nlohmann::json trace;      ///< trace_to_json output
};

inline nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json j;
  j["format"] = "kpls-model";
  j["version"] = kModelSchemaVersion;
  j["kernel"] = kernel_to_json(model.kernel);
  j["chosen_m"] = model.chosen_m;
  j["y_mean"] = model.y_mean;
  j["y_scale"] = model.y_scale;
  j["coefficients"] = std::vector<double>(
      model.coeffs.data(), model.coeffs.data() + model.coeffs.size());
  nlohmann::json xrows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.x.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index jj = 0; jj < model.x.cols(); ++jj) {
      r.push_back(model.x(i, jj));
    }
    xrows.push_back(std::move(r));
  }
  j["x"] = std::move(xrows);
  j["x_digest"] = "fnv1a64:" + detail::hex64(detail::fnv1a64(model.x));
  j["rule"] = model.rule;
  j["trace"] = model.trace;
  return j;
}

inline void save_model(const std::string& path, const FittedModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_json(model).dump(2) << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline FittedModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "kpls-model") {
    throw IoError("not a kpls model file");
  }
  if (j.value("version", -1) != kModelSchemaVersion) {
    throw IoError("unsupported model schema version");
  }
  FittedModel m;
  m.kernel = kernel_from_json(j.at("kernel"));
  m.chosen_m = j.at("chosen_m").get<int>();
  m.y_mean = j.at("y_mean").get<double>();
  m.y_scale = j.at("y_scale").get<double>();

  const auto& coeffs = j.at("coefficients");
  m.coeffs.resize(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    m.coeffs[static_cast<Eigen::Index>(i)] = coeffs[i].get<double>();
  }

  const auto& xrows = j.at("x");
  if (xrows.empty()) throw IoError("model has no training points");
  const Eigen::Index n = static_cast<Eigen::Index>(xrows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(xrows[0].size());
  m.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = xrows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw IoError("model training rows have inconsistent widths");
    }
    for (Eigen::Index jj = 0; jj < d; ++jj) {
      m.x(i, jj) = row[static_cast<std::size_t>(jj)].get<double>();
    }
  }
  if (m.coeffs.size() != n) {
    throw IoError("model has " + std::to_string(m.coeffs.size()) +
                  " coefficients for " + std::to_string(n) +
                  " training points");
  }
  const std::string digest =
      "fnv1a64:" + detail::hex64(detail::fnv1a64(m.x));
  if (j.contains("x_digest") && j.at("x_digest").get<std::string>() != digest) {
    throw IoError("model training-point digest mismatch");
  }
  m.rule = j.value("rule", nlohmann::json::object());
  m.trace = j.value("trace", nlohmann::json::object());
  return m;
}

inline FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  return model_from_json(j);
}

/// Predictions in the raw response scale at new points.
inline Eigen::VectorXd predict(const FittedModel& model,
                               const Eigen::MatrixXd& x_new) {
  const RkhsElement g{model.coeffs, 0};
  const Eigen::VectorXd centered = evaluate(g, model.x, model.kernel, x_new);
  return (centered.array() * model.y_scale + model.y_mean).matrix();
}

/*!
 * \brief Population model from a JSON description.
 *
 * Fields: grid (array of rows or of scalars for 1-dim), weights, kernel, and
 * either f_bar (explicit values) or formula (named; "default_sine" is
 * 0.8 sin(3 x) exp(-x^2) clipped to +-0.9, first coordinate). noise is
 * either "none" or {"kind": "bounded_uniform", "half_width": h}.
 */
inline PopulationModel population_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("population config must be an object");
  PopulationModel m;

  const auto& grid = j.at("grid");
  if (!grid.is_array() || grid.empty()) {
    throw IoError("population grid must be a nonempty array");
  }
  const bool nested = grid[0].is_array();
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index d =
      nested ? static_cast<Eigen::Index>(grid[0].size()) : 1;
  m.grid.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = grid[static_cast<std::size_t>(i)];
    if (nested) {
      if (static_cast<Eigen::Index>(row.size()) != d) {
        throw IoError("population grid rows have inconsistent widths");
      }
      for (Eigen::Index jj = 0; jj < d; ++jj) {
        m.grid(i, jj) = row[static_cast<std::size_t>(jj)].get<double>();
      }
    } else {
      m.grid(i, 0) = row.get<double>();
    }
  }

  const auto& weights = j.at("weights");
  if (static_cast<Eigen::Index>(weights.size()) != n) {
    throw IoError("population weights must match the grid size");
  }
  m.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.weights[i] = weights[static_cast<std::size_t>(i)].get<double>();
  }

  m.kernel = kernel_from_json(j.at("kernel"));

  if (j.contains("f_bar")) {
    const auto& fb = j.at("f_bar");
    if (static_cast<Eigen::Index>(fb.size()) != n) {
      throw IoError("f_bar must match the grid size");
    }
    m.f_bar.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      m.f_bar[i] = fb[static_cast<std::size_t>(i)].get<double>();
    }
  } else if (j.contains("formula")) {
    const std::string name = j.at("formula").get<std::string>();
    if (name != "default_sine") {
      throw IoError("unknown f_bar formula '" + name + "'");
    }
    m.f_bar.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = m.grid(i, 0);
      m.f_bar[i] =
          std::clamp(0.8 * std::sin(3.0 * x) * std::exp(-x * x), -0.9, 0.9);
    }
  } else {
    throw IoError("population config needs f_bar values or a formula");
  }

  if (j.contains("noise")) {
    const auto& noise = j.at("noise");
    if (noise.is_string() && noise.get<std::string>() == "none") {
      m.noise = NoiseKind::none;
    } else if (noise.is_object() &&
               noise.value("kind", "") == "bounded_uniform") {
      m.noise = NoiseKind::bounded_uniform;
      m.half_width = noise.at("half_width").get<double>();
    } else {
      throw IoError("unrecognized noise description");
    }
  }

  validate(m);
  return m;
}

inline PopulationModel load_population(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  return population_from_json(j);
}

/// Versioned header line + rows; see cmd_rules_compare for the columns.
inline std::string rules_compare_csv(const Rule1Result& r1,
                                     const Rule2Result& r2) {
  std::string out = "# kpls rules-compare v1\n";
  out +=
      "m,delta_g,complexity,threshold_rule1,threshold_rule2,"
      "rule1_stop,rule2_stop\n";
  int rows = static_cast<int>(r1.monitor.size());
  rows = std::max<int>(rows, r2.rows.empty() ? 1 : r2.rows.back().m + 1);
  for (int m = 0; m < rows; ++m) {
    out += std::to_string(m);
    out += ",";
    if (m < static_cast<int>(r1.monitor.size()) && r1.monitor[m].defined) {
      out += detail::format_double(r1.monitor[m].delta_g);
    }
    out += ",";
    if (m >= 1 && m - 1 < static_cast<int>(r2.rows.size())) {
      out += detail::format_double(r2.rows[static_cast<std::size_t>(m - 1)]
                                       .complexity);
    }
    out += ",";
    out += detail::format_double(r1.threshold);
    out += ",";
    out += detail::format_double(r2.threshold);
    out += ",";
    out += (m == r1.chosen_m) ? "stop" : "";
    out += ",";
    out += (m == r2.chosen_m) ? "stop" : "";
    out += "\n";
  }
  return out;
}

/// Per-run rows of a learning-curve table.
inline std::string experiment_rows_csv(const ExperimentTable& table) {
  std::string out = "# kpls experiment v1\n";
  out += "n,rep,seed,chosen_m,l2_error\n";
  for (const ExperimentRow& r : table.rows) {
    out += std::to_string(r.n);
    out += ",";
    out += std::to_string(r.rep);
    out += ",";
    out += std::to_string(r.seed);
    out += ",";
    out += std::to_string(r.chosen_m);
    out += ",";
    out += detail::format_double(r.l2_err);
    out += "\n";
  }
  return out;
}

/// Median summary of a learning-curve table.
inline std::string experiment_summary_csv(const ExperimentTable& table) {
  std::string out = "# kpls experiment-summary v1\n";
  out += "n,median_chosen_m,median_l2_error\n";
  for (const ExperimentSummary& s : table.medians) {
    out += std::to_string(s.n);
    out += ",";
    out += detail::format_double(s.median_m);
    out += ",";
    out += detail::format_double(s.median_err);
    out += "\n";
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace kpls

#endif  // KPLS_IO_HPP_
