/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 *
 * Command-line surface: fit/predict on CSV data, stopping-rule selection,
 * monitor and complexity trace export, and the oracle experiment runner.
 */
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kpls/kpls.hpp"

namespace {

bool log_enabled() {
  const char* v = std::getenv("KPLS_LOG");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << "kpls: " << msg << "\n";
}

/// Median pairwise distance between training points; the deterministic
/// sigma default when none is supplied.
double median_heuristic_sigma(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dists.push_back((x.row(i) - x.row(j)).norm());
    }
  }
  if (dists.empty()) {
    throw kpls::ParameterError("sigma heuristic needs at least two points");
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t k = dists.size() / 2;
  const double med = dists.size() % 2 == 1
                         ? dists[k]
                         : 0.5 * (dists[k - 1] + dists[k]);
  if (!(med > 0.0)) {
    throw kpls::ParameterError(
        "sigma heuristic failed: median pairwise distance is zero");
  }
  return med;
}

struct KernelArgs {
  std::string kernel = "gaussian";
  std::optional<double> sigma;
  int degree = 3;
};

void add_kernel_flags(CLI::App* cmd, KernelArgs& args) {
  cmd->add_option("--kernel", args.kernel, "kernel family")
      ->check(CLI::IsMember({"gaussian", "linear", "poly"}))
      ->capture_default_str();
  cmd->add_option("--sigma", args.sigma,
                  "gaussian bandwidth (default: median heuristic)");
  cmd->add_option("--degree", args.degree, "polynomial degree")
      ->capture_default_str();
}

kpls::KernelSpec make_kernel(const KernelArgs& args,
                             const Eigen::MatrixXd& x) {
  if (args.kernel == "gaussian") {
    const double sigma =
        args.sigma ? *args.sigma : median_heuristic_sigma(x);
    log_line("gaussian kernel, sigma = " + std::to_string(sigma));
    return kpls::KernelSpec::gaussian(sigma);
  }
  if (args.kernel == "linear") return kpls::KernelSpec::linear();
  return kpls::KernelSpec::polynomial(args.degree);
}

kpls::ClipPolicy parse_policy(const std::string& name) {
  if (name == "rescale") return kpls::ClipPolicy::rescale;
  if (name == "clip") return kpls::ClipPolicy::clip;
  return kpls::ClipPolicy::reject;
}

struct FitArgs {
  std::string data;
  std::string out;
  std::string trace_out;
  std::string rule = "rule1";
  std::string policy = "rescale";
  KernelArgs kernel;
  double gamma = 0.25;
  double nu = 0.25;
  int fixed_m = 0;
  int m_max = 0;
};

void run_fit(const FitArgs& args) {
  const kpls::RawData raw = kpls::read_csv(args.data);
  const kpls::Dataset data =
      kpls::preprocess(raw.x, raw.y, parse_policy(args.policy));
  const kpls::KernelSpec spec = make_kernel(args.kernel, data.x);
  log_line("fit on " + std::to_string(data.n()) + " rows, rule " + args.rule);

  kpls::FittedModel model;
  model.kernel = spec;
  model.x = data.x;
  model.y_mean = data.y_mean;
  model.y_scale = data.y_scale;

  nlohmann::json monitor_json;
  if (args.rule == "rule1") {
    const kpls::Rule1Result r =
        kpls::stopping_rule_1(data, spec, args.gamma, args.m_max);
    model.chosen_m = r.chosen_m;
    model.coeffs = r.g.coeffs;
    model.rule = {{"kind", "rule1"},
                  {"gamma", args.gamma},
                  {"threshold", r.threshold},
                  {"cause", kpls::to_string(r.cause)}};
    model.trace = kpls::trace_to_json(r.trace);
    monitor_json = kpls::monitor_to_json(r.monitor);
  } else if (args.rule == "rule2") {
    const kpls::Rule2Result r =
        kpls::stopping_rule_2(data, spec, args.nu, args.m_max);
    model.chosen_m = r.chosen_m;
    model.coeffs = r.g.coeffs;
    model.rule = {{"kind", "rule2"},
                  {"nu", args.nu},
                  {"threshold", r.threshold}};
    model.trace = kpls::trace_to_json(r.trace);
  } else {
    if (args.fixed_m < 1) {
      throw kpls::ParameterError("--rule fixed needs --m >= 1");
    }
    const kpls::CgTrace trace = kpls::fit_cg(data, spec, args.fixed_m);
    model.chosen_m = trace.steps();
    model.coeffs = trace.final_g().coeffs;
    model.rule = {{"kind", "fixed"}, {"requested_m", args.fixed_m}};
    model.trace = kpls::trace_to_json(trace);
  }

  kpls::save_model(args.out, model);
  if (!args.trace_out.empty()) {
    nlohmann::json extra;
    extra["trace"] = model.trace;
    if (!monitor_json.is_null()) extra["monitor"] = monitor_json;
    kpls::write_text(args.trace_out, extra.dump(2) + "\n");
  }
  std::cout << "model written to " << args.out
            << " (chosen_m = " << model.chosen_m << ")\n";
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

void run_predict(const PredictArgs& args) {
  const kpls::FittedModel model = kpls::load_model(args.model);
  const kpls::RawData raw = kpls::read_csv(args.data);

  Eigen::MatrixXd features;
  const Eigen::Index d = model.x.cols();
  if (raw.x.cols() == d) {
    features = raw.x;
  } else if (raw.x.cols() == d - 1) {
    // The CSV reader always treats the last column as the target; if the
    // feature count is one short the "target" is really a feature.
    features.resize(raw.x.rows(), d);
    features.leftCols(d - 1) = raw.x;
    features.col(d - 1) = raw.y;
  } else {
    throw kpls::DimensionError(
        "prediction data has " + std::to_string(raw.x.cols() + 1) +
        " columns; the model needs " + std::to_string(d) +
        " features (target column optional)");
  }

  const Eigen::VectorXd pred = kpls::predict(model, features);
  std::string out = "prediction\n";
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    out += kpls::detail::format_double(pred[i]);
    out += "\n";
  }
  kpls::write_text(args.out, out);
  std::cout << pred.size() << " predictions written to " << args.out << "\n";
}

struct MonitorArgs {
  std::string data;
  std::string out;
  std::string policy = "rescale";
  KernelArgs kernel;
  double gamma = 0.25;
  int m_max = 0;
};

void run_monitor(const MonitorArgs& args) {
  const kpls::RawData raw = kpls::read_csv(args.data);
  const kpls::Dataset data =
      kpls::preprocess(raw.x, raw.y, parse_policy(args.policy));
  const kpls::KernelSpec spec = make_kernel(args.kernel, data.x);
  const kpls::Rule1Result r =
      kpls::stopping_rule_1(data, spec, args.gamma, args.m_max);

  nlohmann::json j;
  j["format"] = "kpls-monitor";
  j["version"] = 1;
  j["n"] = data.n();
  j["eps_n"] = kpls::epsilon_n(data.n());
  j["gamma"] = args.gamma;
  j["threshold"] = r.threshold;
  j["chosen_m"] = r.chosen_m;
  j["cause"] = kpls::to_string(r.cause);
  j["monitor"] = kpls::monitor_to_json(r.monitor);
  j["trace"] = kpls::trace_to_json(r.trace);
  kpls::write_text(args.out, j.dump(2) + "\n");
  std::cout << "monitor trace written to " << args.out
            << " (chosen_m = " << r.chosen_m << ", cause = "
            << kpls::to_string(r.cause) << ")\n";
}

struct CompareArgs {
  std::string data;
  std::string out;
  std::string policy = "rescale";
  std::string format = "csv";
  KernelArgs kernel;
  double gamma = 0.25;
  double nu = 0.25;
  int m_max = 0;
};

void run_rules_compare(const CompareArgs& args) {
  const kpls::RawData raw = kpls::read_csv(args.data);
  const kpls::Dataset data =
      kpls::preprocess(raw.x, raw.y, parse_policy(args.policy));
  const kpls::KernelSpec spec = make_kernel(args.kernel, data.x);
  const kpls::Rule1Result r1 =
      kpls::stopping_rule_1(data, spec, args.gamma, args.m_max);
  const kpls::Rule2Result r2 =
      kpls::stopping_rule_2(data, spec, args.nu, args.m_max);

  if (args.format == "csv") {
    kpls::write_text(args.out, kpls::rules_compare_csv(r1, r2));
  } else {
    nlohmann::json j;
    j["format"] = "kpls-rules-compare";
    j["version"] = 1;
    j["rule1"] = {{"chosen_m", r1.chosen_m},
                  {"threshold", r1.threshold},
                  {"cause", kpls::to_string(r1.cause)},
                  {"monitor", kpls::monitor_to_json(r1.monitor)}};
    nlohmann::json rows = nlohmann::json::array();
    for (const kpls::ComplexityRow& row : r2.rows) {
      rows.push_back({{"m", row.m},
                      {"complexity", row.singular ? -1.0 : row.complexity},
                      {"singular", row.singular}});
    }
    j["rule2"] = {{"chosen_m", r2.chosen_m},
                  {"threshold", r2.threshold},
                  {"rows", rows}};
    kpls::write_text(args.out, j.dump(2) + "\n");
  }
  std::cout << "rule1 chose m = " << r1.chosen_m << ", rule2 chose m = "
            << r2.chosen_m << "; table written to " << args.out << "\n";
}

struct ExperimentArgs {
  std::string pop = "default";
  std::string out;
  std::string summary_out;
  std::string rule = "rule1";
  double gamma = 0.25;
  double nu = 0.25;
  std::vector<long long> n_list = {100, 400, 1600};
  int reps = 50;
  unsigned long long seed = 1;
  int m_max = 100;
};

void run_experiment(const ExperimentArgs& args) {
  const kpls::PopulationModel model = args.pop == "default"
                                          ? kpls::default_oracle_model()
                                          : kpls::load_population(args.pop);
  kpls::ExperimentConfig cfg;
  cfg.rule = args.rule == "rule2" ? kpls::StoppingRule::rule2
                                  : kpls::StoppingRule::rule1;
  cfg.gamma = args.gamma;
  cfg.nu = args.nu;
  cfg.n_list.assign(args.n_list.begin(), args.n_list.end());
  cfg.reps = args.reps;
  cfg.seed = args.seed;
  cfg.m_max = args.m_max;

  log_line("experiment: rule " + args.rule + ", " +
           std::to_string(cfg.n_list.size()) + " sample sizes, " +
           std::to_string(cfg.reps) + " reps");
  const kpls::ExperimentTable table = kpls::consistency_experiment(model, cfg);

  kpls::write_text(args.out, kpls::experiment_rows_csv(table));
  const std::string summary_path = args.summary_out.empty()
                                       ? args.out + ".summary.csv"
                                       : args.summary_out;
  kpls::write_text(summary_path, kpls::experiment_summary_csv(table));

  std::cout << "rows written to " << args.out << ", summary to "
            << summary_path << "\n";
  for (const kpls::ExperimentSummary& s : table.medians) {
    std::cout << "n = " << s.n << ": median chosen_m = " << s.median_m
              << ", median L2 error = "
              << kpls::detail::format_double(s.median_err) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel PLS regression with early stopping"};
  app.require_subcommand(1);

  FitArgs fit;
  CLI::App* cmd_fit = app.add_subcommand("fit", "fit a model on CSV data");
  cmd_fit->add_option("--data", fit.data, "training CSV")->required();
  cmd_fit->add_option("--out", fit.out, "model JSON path")->required();
  cmd_fit->add_option("--trace-out", fit.trace_out,
                      "optional JSON path for the full trace");
  cmd_fit->add_option("--rule", fit.rule, "stopping rule")
      ->check(CLI::IsMember({"rule1", "rule2", "fixed"}))
      ->capture_default_str();
  cmd_fit->add_option("--gamma", fit.gamma, "rule-1 exponent")
      ->capture_default_str();
  cmd_fit->add_option("--nu", fit.nu, "rule-2 exponent")
      ->capture_default_str();
  cmd_fit->add_option("--m", fit.fixed_m, "iteration count for --rule fixed");
  cmd_fit->add_option("--m-max", fit.m_max,
                      "iteration budget (0 = min(n, 100))");
  cmd_fit->add_option("--clip-policy", fit.policy, "response preprocessing")
      ->check(CLI::IsMember({"rescale", "clip", "reject"}))
      ->capture_default_str();
  add_kernel_flags(cmd_fit, fit.kernel);

  PredictArgs predict;
  CLI::App* cmd_predict =
      app.add_subcommand("predict", "evaluate a saved model on CSV data");
  cmd_predict->add_option("--model", predict.model, "model JSON")->required();
  cmd_predict->add_option("--data", predict.data, "input CSV")->required();
  cmd_predict->add_option("--out", predict.out, "prediction CSV")->required();

  MonitorArgs monitor;
  CLI::App* cmd_monitor = app.add_subcommand(
      "monitor", "run rule 1 and export the perturbation-bound trace");
  cmd_monitor->add_option("--data", monitor.data, "training CSV")->required();
  cmd_monitor->add_option("--out", monitor.out, "JSON output")->required();
  cmd_monitor->add_option("--gamma", monitor.gamma, "rule-1 exponent")
      ->capture_default_str();
  cmd_monitor->add_option("--m-max", monitor.m_max,
                          "iteration budget (0 = min(n, 100))");
  cmd_monitor->add_option("--clip-policy", monitor.policy,
                          "response preprocessing")
      ->check(CLI::IsMember({"rescale", "clip", "reject"}))
      ->capture_default_str();
  add_kernel_flags(cmd_monitor, monitor.kernel);

  CompareArgs compare;
  CLI::App* cmd_compare = app.add_subcommand(
      "rules-compare", "run both stopping rules on one dataset");
  cmd_compare->add_option("--data", compare.data, "training CSV")->required();
  cmd_compare->add_option("--out", compare.out, "table output")->required();
  cmd_compare->add_option("--gamma", compare.gamma, "rule-1 exponent")
      ->capture_default_str();
  cmd_compare->add_option("--nu", compare.nu, "rule-2 exponent")
      ->capture_default_str();
  cmd_compare->add_option("--m-max", compare.m_max,
                          "iteration budget (0 = min(n, 100))");
  cmd_compare->add_option("--format", compare.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd_compare->add_option("--clip-policy", compare.policy,
                          "response preprocessing")
      ->check(CLI::IsMember({"rescale", "clip", "reject"}))
      ->capture_default_str();
  add_kernel_flags(cmd_compare, compare.kernel);

  ExperimentArgs experiment;
  CLI::App* cmd_experiment = app.add_subcommand(
      "experiment", "learning-curve experiment against a population model");
  cmd_experiment
      ->add_option("--pop", experiment.pop,
                   "population JSON path or 'default'")
      ->capture_default_str();
  cmd_experiment->add_option("--out", experiment.out, "rows CSV")->required();
  cmd_experiment->add_option("--summary-out", experiment.summary_out,
                             "summary CSV (default: <out>.summary.csv)");
  cmd_experiment->add_option("--rule", experiment.rule, "stopping rule")
      ->check(CLI::IsMember({"rule1", "rule2"}))
      ->capture_default_str();
  cmd_experiment->add_option("--gamma", experiment.gamma, "rule-1 exponent")
      ->capture_default_str();
  cmd_experiment->add_option("--nu", experiment.nu, "rule-2 exponent")
      ->capture_default_str();
  cmd_experiment
      ->add_option("--n-list", experiment.n_list,
                   "comma-separated sample sizes")
      ->delimiter(',')
      ->capture_default_str();
  cmd_experiment->add_option("--reps", experiment.reps, "repetitions per n")
      ->capture_default_str();
  cmd_experiment->add_option("--seed", experiment.seed, "master seed")
      ->capture_default_str();
  cmd_experiment->add_option("--m-max", experiment.m_max, "iteration budget")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  }

  try {
    if (cmd_fit->parsed()) run_fit(fit);
    if (cmd_predict->parsed()) run_predict(predict);
    if (cmd_monitor->parsed()) run_monitor(monitor);
    if (cmd_compare->parsed()) run_rules_compare(compare);
    if (cmd_experiment->parsed()) run_experiment(experiment);
  } catch (const kpls::IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 3;
  } catch (const kpls::SingularError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 4;
  } catch (const kpls::Error& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
