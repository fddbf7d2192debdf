#include "blockgibbs/config.hpp"

#include <filesystem>
#include <fstream>

namespace blockgibbs {

namespace {

Eigen::VectorXd parse_vector(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd parse_matrix(const nlohmann::json& j) {
  if (j.empty()) throw ConfigError("config", "empty matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw ConfigError("config", "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

// a matrix section is either explicit rows or {"diag": [...]}
Eigen::MatrixXd parse_matrix_or_diag(const nlohmann::json& j) {
  if (j.is_object() && j.contains("diag")) {
    const Eigen::VectorXd d = parse_vector(j["diag"]);
    return d.asDiagonal();
  }
  return parse_matrix(j);
}

}  // namespace

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("load_config", "cannot open " + path);
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("load_config", std::string("parse error: ") + e.what());
  }
}

void save_config(const std::string& path, const nlohmann::json& config) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("save_config", "cannot open " + path + " for writing");
  }
  out << config.dump(2) << '\n';
}

void validate_config(const nlohmann::json& config) {
  if (!config.contains("seed")) {
    throw ConfigError("validate_config", "seed is mandatory");
  }
  if (config.contains("data") && config["data"].contains("csv")) {
    const std::string path = config["data"]["csv"].get<std::string>();
    if (!std::filesystem::exists(path)) {
      throw ConfigError("validate_config", "dataset path does not exist: " + path);
    }
  }
  for (const char* key : {"allocation", "trace"}) {
    if (config.contains(key) && config[key].is_string()) {
      const std::string path = config[key].get<std::string>();
      if (!std::filesystem::exists(path)) {
        throw ConfigError("validate_config",
                          std::string(key) + " path does not exist: " + path);
      }
    }
  }
}

Hyperparameters parse_hyperparameters(const nlohmann::json& hp) {
  const int k = hp.at("k").get<int>();
  const Eigen::VectorXd m0 = parse_vector(hp.at("m0"));
  const double kappa0 = hp.at("kappa0").get<double>();
  const double nu0 = hp.at("nu0").get<double>();
  SpdMatrix s0(parse_matrix_or_diag(hp.at("s0")));
  const double beta = hp.at("beta").get<double>();
  return Hyperparameters(k, m0, kappa0, nu0, std::move(s0), beta);
}

SimulationSpec parse_simulation(const nlohmann::json& sim) {
  SimulationSpec spec;
  spec.n_per_component = sim.at("n_per_component").get<std::vector<int>>();
  const int k = static_cast<int>(spec.n_per_component.size());
  if (sim.contains("means")) {
    spec.means = parse_matrix(sim["means"]);
  } else if (sim.contains("equidistant_means")) {
    const auto& e = sim["equidistant_means"];
    spec.means = equidistant_means(k, e.at("dim").get<int>(),
                                   e.at("distance").get<double>());
  } else {
    throw ConfigError("parse_simulation", "means or equidistant_means required");
  }
  if (sim.contains("covs")) {
    for (const auto& c : sim["covs"]) {
      spec.covs.emplace_back(parse_matrix_or_diag(c));
    }
  } else if (sim.contains("identity_cov")) {
    const int d = static_cast<int>(spec.means.cols());
    const double scale = sim["identity_cov"].get<double>();
    for (int c = 0; c < k; ++c) {
      spec.covs.emplace_back(scale * Eigen::MatrixXd::Identity(d, d));
    }
  } else {
    throw ConfigError("parse_simulation", "covs or identity_cov required");
  }
  if (sim.contains("outliers")) {
    for (const auto& o : sim["outliers"]) {
      OutlierSpec outlier;
      if (o.is_array()) {
        outlier.point = parse_vector(o);
      } else {
        if (o.contains("point")) {
          outlier.point = parse_vector(o["point"]);
        } else {
          for (const auto& c : o.at("between")) {
            outlier.between.push_back(c.get<int>() - 1);
          }
        }
        outlier.count = o.value("count", 1);
      }
      spec.outliers.push_back(std::move(outlier));
    }
  }
  spec.seed = sim.value("seed", 0ull);
  spec.standardize = sim.value("standardize", false);
  return spec;
}

SamplerConfig parse_sampler(const nlohmann::json& s, std::uint64_t seed) {
  SamplerConfig config;
  config.seed = seed;
  const std::string mode = s.value("sweep_mode", "forward");
  if (mode == "forward") {
    config.sweep_mode = SweepMode::Forward;
  } else if (mode == "reversible") {
    config.sweep_mode = SweepMode::Reversible;
  } else {
    throw ConfigError("parse_sampler", "sweep_mode must be forward or reversible");
  }
  if (s.contains("block")) {
    std::vector<int> indices;
    for (const auto& i : s["block"]) indices.push_back(i.get<int>() - 1);
    config.block = BlockSet(std::move(indices));
  }
  config.block_every = s.value("block_every", 1);
  const std::string style = s.value("block_style", "exact");
  if (style == "exact") {
    config.block_style = BlockStyle::Exact;
  } else if (style == "approx") {
    config.block_style = BlockStyle::Approx;
  } else if (style == "single-site") {
    config.block_style = BlockStyle::SingleSite;
  } else {
    throw ConfigError("parse_sampler", "block_style must be exact, approx, or single-site");
  }
  const std::string ratio = s.value("ratio_mode", "exact");
  if (ratio == "exact") {
    config.ratio_mode = RatioMode::ExactNormalization;
  } else if (ratio == "lazy") {
    config.ratio_mode = RatioMode::Lazy;
  } else if (ratio == "literal") {
    config.ratio_mode = RatioMode::Literal;
  } else {
    throw ConfigError("parse_sampler", "ratio_mode must be exact, lazy, or literal");
  }
  config.max_enumeration = s.value("max_enumeration", 1ull << 20);
  config.max_retries = s.value("max_retries", 25);
  config.thin = s.value("thin", 1);
  config.iterations = s.value("iterations", 0l);
  const std::string init = s.value("init", "random");
  if (init == "random") {
    config.init = SamplerConfig::Init::Random;
  } else if (init == "kmeans") {
    config.init = SamplerConfig::Init::KMeans;
  } else {
    throw ConfigError("parse_sampler", "init must be random or kmeans");
  }
  return config;
}

SurfaceSpec parse_surface(const nlohmann::json& s) {
  SurfaceSpec spec;
  const std::string mode = s.value("mode", "equal-value");
  if (mode == "equal-value") {
    spec.mode = SurfaceSpec::Mode::EqualValue;
  } else if (mode == "fixed-separation") {
    spec.mode = SurfaceSpec::Mode::FixedSeparation;
    spec.separation = s.at("separation").get<double>();
  } else {
    throw ConfigError("parse_surface", "mode must be equal-value or fixed-separation");
  }
  spec.count1 = s.at("count1").get<double>();
  spec.count2 = s.at("count2").get<double>();
  spec.scatter1 = parse_matrix_or_diag(s.at("scatter1"));
  spec.scatter2 = parse_matrix_or_diag(s.at("scatter2"));
  if (s.contains("direction")) {
    spec.direction = parse_vector(s["direction"]);
  } else {
    spec.direction = Eigen::VectorXd::Zero(spec.scatter1.rows());
    spec.direction[0] = 1.0;
  }
  auto parse_axis = [&](const nlohmann::json& a) {
    std::vector<double> nodes;
    if (a.is_array()) {
      for (const auto& v : a) nodes.push_back(v.get<double>());
    } else {
      const double lo = a.at("min").get<double>();
      const double hi = a.at("max").get<double>();
      const int count = a.at("count").get<int>();
      for (int i = 0; i < count; ++i) {
        nodes.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1.0));
      }
    }
    return nodes;
  };
  spec.axis1 = parse_axis(s.at("axis1"));
  spec.axis2 = parse_axis(s.at("axis2"));
  return spec;
}

}  // namespace blockgibbs
