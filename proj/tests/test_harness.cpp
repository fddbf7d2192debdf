#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "blockgibbs/config.hpp"
#include "blockgibbs/csv.hpp"
#include "blockgibbs/simulate.hpp"

using namespace blockgibbs;
using nlohmann::json;

TEST_CASE("equidistant means are pairwise equidistant") {
  const auto means = equidistant_means(4, 3, 11.0);
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      CHECK((means.row(a) - means.row(b)).norm() == doctest::Approx(11.0).epsilon(1e-12));
    }
  }
  // centered at the origin
  CHECK(means.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("equidistant point sits at equal distance from the chosen means") {
  const auto means = equidistant_means(4, 3, 11.0);
  const auto mid2 = equidistant_point(means, {0, 1});
  CHECK((mid2 - 0.5 * (means.row(0) + means.row(1)).transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const auto mid3 = equidistant_point(means, {0, 1, 2});
  const double d0 = (mid3 - means.row(0).transpose()).norm();
  const double d1 = (mid3 - means.row(1).transpose()).norm();
  const double d2 = (mid3 - means.row(2).transpose()).norm();
  CHECK(d0 == doctest::Approx(d1).epsilon(1e-12));
  CHECK(d0 == doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("replication-scale simulation has the documented shape") {
  SimulationSpec spec;
  spec.n_per_component = {40, 39, 39, 39};
  spec.means = equidistant_means(4, 3, 11.0);
  spec.covs.assign(4, SpdMatrix(Eigen::MatrixXd::Identity(3, 3)));
  OutlierSpec outlier;
  outlier.between = {0, 1};
  outlier.count = 3;
  spec.outliers = {outlier};
  spec.seed = 2024;
  spec.standardize = true;
  const auto result = simulate(spec);
  CHECK(result.y.rows() == 160);
  CHECK(result.y.cols() == 3);
  CHECK(result.labels.size() == 160);
  for (int i = 157; i < 160; ++i) CHECK(result.labels[i] == -1);
  // the three outliers share one value equidistant from both flank means
  CHECK((result.y.row(157) - result.y.row(158)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((result.y.row(157) - result.y.row(159)).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd out_point = result.y.row(157).transpose();
  const double d0 = (out_point - result.empirical_means.row(0).transpose()).norm();
  const double d1 = (out_point - result.empirical_means.row(1).transpose()).norm();
  CHECK(d0 == doctest::Approx(d1).epsilon(1e-10));
  CHECK(d0 == doctest::Approx(5.5).epsilon(1e-10));
}

TEST_CASE("single-component simulation is a sane Gaussian sample") {
  SimulationSpec spec;
  spec.n_per_component = {400};
  spec.means = 3.0 * Eigen::MatrixXd::Ones(1, 2);
  spec.covs = {SpdMatrix(Eigen::MatrixXd::Identity(2, 2))};
  spec.seed = 5;
  const auto result = simulate(spec);
  CHECK(result.y.rows() == 400);
  const Eigen::RowVectorXd mean = result.y.colwise().mean();
  const double bound = 4.0 / std::sqrt(400.0);
  CHECK((mean - spec.means.row(0)).cwiseAbs().maxCoeff() < bound);
}

TEST_CASE("standardized components have exact sample moments") {
  SimulationSpec spec;
  spec.n_per_component = {25};
  spec.means = Eigen::MatrixXd::Zero(1, 3);
  spec.means(0, 0) = 2.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
  cov(1, 1) = 4.0;
  spec.covs = {SpdMatrix(cov)};
  spec.seed = 6;
  spec.standardize = true;
  const auto result = simulate(spec);
  const Eigen::RowVectorXd mean = result.y.colwise().mean();
  CHECK((mean - spec.means.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd centered = result.y.rowwise() - mean;
  const Eigen::MatrixXd ss = centered.transpose() * centered;
  CHECK((ss - 24.0 * cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fixed seed gives byte-identical csv output") {
  SimulationSpec spec;
  spec.n_per_component = {10, 10};
  spec.means = equidistant_means(2, 2, 8.0);
  spec.covs.assign(2, SpdMatrix(Eigen::MatrixXd::Identity(2, 2)));
  spec.seed = 7;
  write_matrix_csv("sim_a.csv", simulate(spec).y);
  write_matrix_csv("sim_b.csv", simulate(spec).y);
  std::ifstream a("sim_a.csv"), b("sim_b.csv");
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
  std::remove("sim_a.csv");
  std::remove("sim_b.csv");
}

TEST_CASE("csv round-trips full double precision") {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-17, 123456.789012345;
  write_matrix_csv("roundtrip.csv", m);
  const auto back = load_dataset_csv("roundtrip.csv");
  CHECK((back.matrix() - m).cwiseAbs().maxCoeff() == 0.0);
  std::remove("roundtrip.csv");
}

TEST_CASE("csv loader skips an optional header row") {
  {
    std::ofstream out("header.csv");
    out << "x,y\n1.5,2.5\n3.5,4.5\n";
  }
  const auto data = load_dataset_csv("header.csv");
  CHECK(data.n() == 2);
  CHECK(data.dim() == 2);
  CHECK(data.matrix()(0, 0) == 1.5);
  CHECK(data.matrix()(1, 1) == 4.5);
  std::remove("header.csv");
}

TEST_CASE("label files round-trip with 1-based external labels") {
  const std::vector<int> labels = {0, 2, 1, -1, 0};
  write_labels("labels.txt", labels);
  const auto back = load_labels("labels.txt");
  CHECK(back == labels);
  std::remove("labels.txt");
}

TEST_CASE("config parse-serialize-parse is the identity") {
  const std::string text = R"({
    "seed": 42,
    "out": "results",
    "data": {"simulate": {
      "n_per_component": [10, 10],
      "equidistant_means": {"dim": 2, "distance": 9.0},
      "identity_cov": 1.0,
      "outliers": [{"between": [1, 2], "count": 2}],
      "seed": 42,
      "standardize": true
    }},
    "hyperparameters": {"k": 2, "m0": [0, 0], "kappa0": 0.005, "nu0": 2.5,
                        "s0": {"diag": [2, 2]}, "beta": 3.0},
    "sampler": {"iterations": 100, "thin": 5, "block": [21, 22],
                "block_every": 5, "block_style": "approx"}
  })";
  {
    std::ofstream out("config_rt.json");
    out << text;
  }
  const json first = load_config("config_rt.json");
  save_config("config_rt2.json", first);
  const json second = load_config("config_rt2.json");
  CHECK(first == second);
  std::remove("config_rt.json");
  std::remove("config_rt2.json");
}

TEST_CASE("config validation requires a seed and existing paths") {
  json no_seed = {{"out", "x"}};
  CHECK_THROWS_AS(validate_config(no_seed), ConfigError);
  json bad_path = {{"seed", 1}, {"data", {{"csv", "does_not_exist.csv"}}}};
  CHECK_THROWS_AS(validate_config(bad_path), ConfigError);
}

TEST_CASE("typed config sections parse into the library structures") {
  const json hp_section = {{"k", 4},       {"m0", {0, 0, 0}},
                           {"kappa0", 0.005}, {"nu0", 2.02},
                           {"s0", {{"diag", {2, 2, 2}}}},
                           {"beta", 3.0}};
  const auto hp = parse_hyperparameters(hp_section);
  CHECK(hp.k() == 4);
  CHECK(hp.dim() == 3);
  CHECK(hp.s0().entries()(1, 1) == 2.0);

  const json sampler_section = {{"iterations", 5000},   {"thin", 20},
                                {"block", {158, 159, 160}}, {"block_every", 20},
                                {"block_style", "approx"},  {"init", "kmeans"},
                                {"sweep_mode", "reversible"}};
  const auto sampler = parse_sampler(sampler_section, 99);
  CHECK(sampler.seed == 99);
  CHECK(sampler.iterations == 5000);
  CHECK(sampler.block.has_value());
  CHECK(sampler.block->indices() == std::vector<int>{157, 158, 159});
  CHECK(sampler.block_style == BlockStyle::Approx);
  CHECK(sampler.sweep_mode == SweepMode::Reversible);

  const json surface_section = {
      {"count1", 23}, {"count2", 23},
      {"scatter1", {{"diag", {80.0}}}}, {"scatter2", {{"diag", {80.0}}}},
      {"axis1", {{"min", 0.5}, {"max", 10.0}, {"count", 20}}},
      {"axis2", {{"min", 0.5}, {"max", 10.0}, {"count", 20}}}};
  const auto spec = parse_surface(surface_section);
  CHECK(spec.axis1.size() == 20);
  CHECK(spec.axis1.front() == 0.5);
  CHECK(spec.axis1.back() == 10.0);
  CHECK(spec.mode == SurfaceSpec::Mode::EqualValue);
}
