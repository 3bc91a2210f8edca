/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "kpls/io.hpp"
#include "test_support.hpp"

using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

kpls::FittedModel make_fitted(kpls_test::Rng& rng) {
  const kpls::Dataset data = kpls_test::random_dataset(rng, 12);
  const kpls::KernelSpec spec = kpls::KernelSpec::gaussian(0.7);
  const kpls::CgTrace trace = kpls::fit_cg(data, spec, 3);

  kpls::FittedModel m;
  m.kernel = spec;
  m.x = data.x;
  m.coeffs = trace.final_g().coeffs;
  m.y_mean = data.y_mean;
  m.y_scale = data.y_scale;
  m.chosen_m = trace.steps();
  m.rule = {{"rule", "fixed"}, {"m", trace.steps()}};
  m.trace = kpls::trace_to_json(trace);
  return m;
}

}  // namespace

TEST_CASE("kernel descriptions round trip", "[io]") {
  const kpls::KernelSpec g = kpls::KernelSpec::gaussian(0.5);
  const kpls::KernelSpec g2 = kpls::kernel_from_json(kpls::kernel_to_json(g));
  CHECK(g2.family() == kpls::KernelFamily::gaussian);
  CHECK(g2.sigma() == 0.5);

  const kpls::KernelSpec l =
      kpls::kernel_from_json(kpls::kernel_to_json(kpls::KernelSpec::linear()));
  CHECK(l.family() == kpls::KernelFamily::linear);

  const kpls::KernelSpec p = kpls::kernel_from_json(
      kpls::kernel_to_json(kpls::KernelSpec::polynomial(3)));
  CHECK(p.family() == kpls::KernelFamily::polynomial);
  CHECK(p.degree() == 3);

  CHECK_THROWS_AS(kpls::kernel_from_json(nlohmann::json::object()),
                  kpls::IoError);
  CHECK_THROWS_AS(kpls::kernel_from_json({{"family", "cubic"}}),
                  kpls::IoError);
  CHECK_THROWS_AS(kpls::kernel_from_json({{"family", "gaussian"}}),
                  kpls::IoError);
  CHECK_THROWS_AS(kpls::kernel_from_json({{"family", "polynomial"}}),
                  kpls::IoError);
}

TEST_CASE("fitted models survive a save and load", "[io]") {
  kpls_test::Rng rng(81);
  const kpls::FittedModel m = make_fitted(rng);
  const std::filesystem::path p = temp_path("kpls_io_model.json");
  kpls::save_model(p.string(), m);

  const kpls::FittedModel back = kpls::load_model(p.string());
  CHECK(back.kernel.family() == m.kernel.family());
  CHECK(back.kernel.sigma() == m.kernel.sigma());
  CHECK((back.x - m.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.coeffs - m.coeffs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.y_mean == m.y_mean);
  CHECK(back.y_scale == m.y_scale);
  CHECK(back.chosen_m == m.chosen_m);
  CHECK(back.rule == m.rule);
  CHECK(back.trace == m.trace);

  kpls_test::Rng prng(82);
  const Eigen::MatrixXd x_new = kpls_test::random_points(prng, 5, 1);
  const Eigen::VectorXd before = kpls::predict(m, x_new);
  const Eigen::VectorXd after = kpls::predict(back, x_new);
  CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);

  std::filesystem::remove(p);
  CHECK_THROWS_AS(kpls::load_model(p.string()), kpls::IoError);
}

TEST_CASE("model files are rejected when tampered with", "[io]") {
  kpls_test::Rng rng(83);
  const kpls::FittedModel m = make_fitted(rng);
  nlohmann::json j = kpls::model_to_json(m);

  nlohmann::json tampered = j;
  tampered["x"][0][0] = tampered["x"][0][0].get<double>() + 1e-9;
  CHECK_THROWS_AS(kpls::model_from_json(tampered), kpls::IoError);

  nlohmann::json wrong_version = j;
  wrong_version["version"] = 99;
  CHECK_THROWS_AS(kpls::model_from_json(wrong_version), kpls::IoError);

  nlohmann::json wrong_format = j;
  wrong_format["format"] = "other";
  CHECK_THROWS_AS(kpls::model_from_json(wrong_format), kpls::IoError);

  nlohmann::json short_coeffs = j;
  short_coeffs["coefficients"].erase(0);
  CHECK_THROWS_AS(kpls::model_from_json(short_coeffs), kpls::IoError);

  nlohmann::json ragged = j;
  ragged["x"][1].push_back(0.0);
  CHECK_THROWS_AS(kpls::model_from_json(ragged), kpls::IoError);

  const std::filesystem::path p = temp_path("kpls_io_bad.json");
  std::ofstream(p) << "{ not json";
  CHECK_THROWS_AS(kpls::load_model(p.string()), kpls::IoError);
  std::filesystem::remove(p);
}

TEST_CASE("population configs parse in both grid layouts", "[io]") {
  nlohmann::json flat = {
      {"grid", {-0.5, 0.0, 0.5}},
      {"weights", {0.25, 0.5, 0.25}},
      {"kernel", {{"family", "gaussian"}, {"sigma", 0.4}}},
      {"f_bar", {0.1, -0.2, 0.3}},
  };
  const kpls::PopulationModel m1 = kpls::population_from_json(flat);
  CHECK(m1.size() == 3);
  CHECK(m1.dim() == 1);
  CHECK(m1.grid(2, 0) == 0.5);
  CHECK(m1.noise == kpls::NoiseKind::none);

  nlohmann::json nested = flat;
  nested["grid"] = {{-0.5, 0.1}, {0.0, -0.1}, {0.5, 0.2}};
  nested["noise"] = {{"kind", "bounded_uniform"}, {"half_width", 0.05}};
  const kpls::PopulationModel m2 = kpls::population_from_json(nested);
  CHECK(m2.dim() == 2);
  CHECK(m2.grid(1, 1) == -0.1);
  CHECK(m2.noise == kpls::NoiseKind::bounded_uniform);
  CHECK(m2.half_width == 0.05);

  nlohmann::json none_noise = flat;
  none_noise["noise"] = "none";
  CHECK(kpls::population_from_json(none_noise).noise ==
        kpls::NoiseKind::none);
}

TEST_CASE("the named formula reproduces the default signal", "[io]") {
  const kpls::PopulationModel ref = kpls::default_oracle_model();
  nlohmann::json j;
  j["grid"] = nlohmann::json::array();
  j["weights"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    j["grid"].push_back(ref.grid(i, 0));
    j["weights"].push_back(ref.weights[i]);
  }
  j["kernel"] = {{"family", "gaussian"}, {"sigma", 0.5}};
  j["formula"] = "default_sine";
  j["noise"] = {{"kind", "bounded_uniform"}, {"half_width", 0.1}};

  const kpls::PopulationModel m = kpls::population_from_json(j);
  CHECK((m.f_bar - ref.f_bar).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.half_width == ref.half_width);
}

TEST_CASE("population config errors keep their kinds", "[io]") {
  nlohmann::json base = {
      {"grid", {-0.5, 0.0, 0.5}},
      {"weights", {0.25, 0.5, 0.25}},
      {"kernel", {{"family", "gaussian"}, {"sigma", 0.4}}},
      {"f_bar", {0.1, -0.2, 0.3}},
  };

  // Structural problems are I/O errors...
  nlohmann::json bad = base;
  bad.erase("f_bar");
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::IoError);
  bad = base;
  bad["formula"] = "unknown";
  bad.erase("f_bar");
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::IoError);
  bad = base;
  bad["weights"] = {0.5, 0.5};
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::IoError);
  bad = base;
  bad["noise"] = "loud";
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::IoError);
  bad = base;
  bad["grid"] = nlohmann::json::array();
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::IoError);

  // ...while violated model invariants keep their validation kinds.
  bad = base;
  bad["weights"] = {0.2, 0.5, 0.2};
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::ParameterError);
  bad = base;
  bad["f_bar"] = {0.1, -1.2, 0.3};
  CHECK_THROWS_AS(kpls::population_from_json(bad), kpls::BoundsError);
}

TEST_CASE("summaries omit never-computed scalars", "[io]") {
  Eigen::MatrixXd g(1, 1);
  g << 1.0;
  const kpls::OperatorContext ctx = kpls::OperatorContext::empirical(g);
  Eigen::VectorXd y(1);
  y << 0.5;
  const kpls::CgTrace trace = kpls::fit_cg(ctx, y, 5);

  const nlohmann::json tj = kpls::trace_to_json(trace);
  CHECK(tj["exit_reason"] == "exact_fit");
  CHECK(tj["steps"] == 1);
  REQUIRE(tj["iterations"].size() == 2);
  CHECK(tj["iterations"][0].contains("alpha"));
  CHECK(tj["iterations"][0].contains("d_curvature"));
  // The final record's loop body never ran.
  CHECK_FALSE(tj["iterations"][1].contains("alpha"));
  CHECK_FALSE(tj["iterations"][1].contains("beta"));
  CHECK(tj["iterations"][1].contains("u_norm2"));

  const kpls::MonitorState init = kpls::monitor_init(0.5, 0.1);
  const nlohmann::json mj = kpls::monitor_to_json({init});
  REQUIRE(mj.size() == 1);
  CHECK(mj[0]["m"] == 0);
  CHECK(mj[0]["defined"] == true);
  CHECK(mj[0].contains("eps4"));
  CHECK_FALSE(mj[0].contains("eps1"));
  CHECK_FALSE(mj[0].contains("delta_alpha"));
}

TEST_CASE("formatted doubles parse back bitwise", "[io]") {
  const double values[] = {0.0,    1.0 / 3.0, 0.1,   -2.5e-300,
                           1e300,  kpls_test::kEpsN100,
                           -0.75,  5e-324};
  for (double v : values) {
    const std::string s = kpls::detail::format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
}

TEST_CASE("csv writers emit versioned headers deterministically", "[io]") {
  kpls_test::Rng rng(84);
  const kpls::Dataset data = kpls_test::random_dataset(rng, 20);
  const kpls::KernelSpec spec = kpls::KernelSpec::gaussian(0.7);
  const kpls::Rule1Result r1 = kpls::stopping_rule_1(data, spec);
  const kpls::Rule2Result r2 = kpls::stopping_rule_2(data, spec);

  const std::string csv = kpls::rules_compare_csv(r1, r2);
  CHECK(csv.rfind("# kpls rules-compare v1\n", 0) == 0);
  CHECK(csv.find("m,delta_g,complexity,threshold_rule1,threshold_rule2,"
                 "rule1_stop,rule2_stop\n") != std::string::npos);
  CHECK(csv == kpls::rules_compare_csv(r1, r2));

  kpls::ExperimentConfig cfg;
  cfg.n_list = {50};
  cfg.reps = 2;
  cfg.seed = 3;
  const kpls::ExperimentTable table =
      kpls::consistency_experiment(kpls::default_oracle_model(), cfg);
  const std::string rows = kpls::experiment_rows_csv(table);
  CHECK(rows.rfind("# kpls experiment v1\n", 0) == 0);
  CHECK(rows.find("n,rep,seed,chosen_m,l2_error\n") != std::string::npos);
  CHECK(rows == kpls::experiment_rows_csv(table));

  const std::string summary = kpls::experiment_summary_csv(table);
  CHECK(summary.rfind("# kpls experiment-summary v1\n", 0) == 0);
  CHECK(summary.find("n,median_chosen_m,median_l2_error\n") !=
        std::string::npos);

  const std::filesystem::path p = temp_path("kpls_io_rows.csv");
  kpls::write_text(p.string(), rows);
  std::ifstream in(p, std::ios::binary);
  std::string back((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(back == rows);
  std::filesystem::remove(p);

  CHECK_THROWS_AS(kpls::write_text("/nonexistent-dir/x.csv", rows),
                  kpls::IoError);
}
