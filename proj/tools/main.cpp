// Command-line surface for the blocked collapsed Gibbs toolkit: data
// simulation, chain running, latent-pair analysis, and trace diagnostics.
// Every command takes a JSON config (--config), with --seed and --out
// overriding the config's fields; the effective merged config is echoed
// into the output directory.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockgibbs/config.hpp"
#include "blockgibbs/csv.hpp"
#include "blockgibbs/diagnostics.hpp"
#include "blockgibbs/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blockgibbs;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

json load_merged_config(const CommonArgs& args) {
  json config = load_config(args.config_path);
  if (args.seed_override) config["seed"] = *args.seed_override;
  if (args.out_override) config["out"] = *args.out_override;
  validate_config(config);
  return config;
}

fs::path prepare_out_dir(const json& config) {
  const std::string out = config.value("out", "out");
  fs::create_directories(out);
  save_config((fs::path(out) / "config.json").string(), config);
  return out;
}

Dataset resolve_dataset(const json& config) {
  const auto& data = config.at("data");
  if (data.contains("csv")) {
    return load_dataset_csv(data["csv"].get<std::string>());
  }
  if (data.contains("simulate")) {
    auto spec = parse_simulation(data["simulate"]);
    return Dataset(simulate(spec).y);
  }
  throw ConfigError("data", "data section must contain csv or simulate");
}

std::vector<int> resolve_allocation(const json& section, int n) {
  if (!section.contains("allocation")) {
    throw ConfigError("allocation", "an allocation label file is required");
  }
  auto labels = load_labels(section["allocation"].get<std::string>());
  if (static_cast<int>(labels.size()) != n) {
    throw ConfigError("allocation", "label file length does not match dataset");
  }
  return labels;
}

void write_axis_grid_csv(const fs::path& path, const std::vector<double>& axis1,
                         const std::vector<double>& axis2,
                         const std::vector<double>& grid) {
  std::ofstream out(path);
  if (!out) throw ConfigError("surface", "cannot open " + path.string());
  for (double b : axis2) out << ',' << format_double(b);
  out << '\n';
  for (std::size_t i = 0; i < axis1.size(); ++i) {
    out << format_double(axis1[i]);
    for (std::size_t j = 0; j < axis2.size(); ++j) {
      out << ',' << format_double(grid[i * axis2.size() + j]);
    }
    out << '\n';
  }
}

int cmd_simulate(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  auto spec = parse_simulation(config.at("data").at("simulate"));
  const auto result = simulate(spec);
  write_matrix_csv((out / "dataset.csv").string(), result.y);
  write_labels((out / "labels.txt").string(), result.labels);
  std::cout << "wrote " << (out / "dataset.csv").string() << " ("
            << result.y.rows() << " observations)\n";
  return 0;
}

int cmd_sample(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const Dataset data = resolve_dataset(config);
  const auto hp = parse_hyperparameters(config.at("hyperparameters"));
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  auto sampler = parse_sampler(config.at("sampler"), seed);
  const int chains = config.value("chains", 1);
  if (chains == 1) {
    const auto trace = run_chain(data, hp, sampler);
    write_trace_jsonl((out / "trace.jsonl").string(), trace);
    const auto summary = acceptance_report(trace);
    if (summary.moves > 0) {
      std::cout << "block moves: " << summary.moves
                << ", acceptance rate: " << format_double(summary.rate) << '\n';
    }
    std::cout << "wrote " << (out / "trace.jsonl").string() << '\n';
    return 0;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> failures(chains);
  for (int c = 0; c < chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        SamplerConfig chain_config = sampler;
        chain_config.seed = seed + static_cast<std::uint64_t>(c);
        const auto trace = run_chain(data, hp, chain_config);
        write_trace_jsonl((out / ("trace_" + std::to_string(c) + ".jsonl")).string(),
                          trace);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  std::cout << "wrote " << chains << " chains under " << out.string() << '\n';
  return 0;
}

JointAllocationTable build_pair_table(const json& config, const Dataset& data,
                                      const Hyperparameters& hp, int& i, int& j) {
  const auto& pair = config.at("pair");
  i = pair.at("i").get<int>() - 1;
  j = pair.at("j").get<int>() - 1;
  auto allocation = resolve_allocation(pair, data.n());
  if (pair.contains("block")) {
    std::vector<int> block_indices;
    for (const auto& b : pair["block"]) block_indices.push_back(b.get<int>() - 1);
    BlockSet block(block_indices);
    for (int b : block.indices()) allocation[b] = -1;
    return pair_table_marginalized(data, allocation, block, i, j, hp);
  }
  allocation[i] = -1;
  allocation[j] = -1;
  return pair_table(data, allocation, i, j, hp);
}

int cmd_analyze_pair(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const Dataset data = resolve_dataset(config);
  const auto hp = parse_hyperparameters(config.at("hyperparameters"));
  int i, j;
  const auto table = build_pair_table(config, data, hp, i, j);
  write_matrix_csv((out / "pair_table.csv").string(), table.probs);
  std::cout << "wrote " << (out / "pair_table.csv").string() << '\n';
  if (hp.k() == 2) {
    std::cout << "pair correlation: " << format_double(pair_correlation(table))
              << '\n';
  }
  return 0;
}

int cmd_surface(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const auto hp = parse_hyperparameters(config.at("hyperparameters"));
  const auto spec = parse_surface(config.at("surface"));
  const auto grid = correlation_surface(spec, hp);
  write_axis_grid_csv(out / "surface.csv", spec.axis1, spec.axis2, grid);
  std::cout << "wrote " << (out / "surface.csv").string() << '\n';
  return 0;
}

int cmd_bound(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const Dataset data = resolve_dataset(config);
  const auto hp = parse_hyperparameters(config.at("hyperparameters"));
  int i, j;
  const auto table = build_pair_table(config, data, hp, i, j);
  const auto bound = rate_lower_bound(table);
  nlohmann::ordered_json report;
  report["bound"] = bound.value;
  report["k_prime"] = bound.k_prime_argmax;
  report["pair"] = {i + 1, j + 1};
  std::ofstream report_out(out / "bound.json");
  report_out << report.dump() << '\n';
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_psm(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const auto& section = config.at("psm");
  const auto trace = read_trace_jsonl(section.at("trace").get<std::string>());
  const auto p = psm(trace, section.value("burn_in", 0), section.value("thin", 1));
  Eigen::MatrixXd entries = p.entries;
  if (section.contains("ordering")) {
    const auto order = load_labels(section["ordering"].get<std::string>());
    if (static_cast<int>(order.size()) != p.n) {
      throw ConfigError("psm", "ordering file length does not match matrix");
    }
    Eigen::MatrixXd permuted(p.n, p.n);
    for (int r = 0; r < p.n; ++r) {
      for (int c = 0; c < p.n; ++c) permuted(r, c) = p.entries(order[r], order[c]);
    }
    entries = permuted;
  }
  write_matrix_csv((out / "psm.csv").string(), entries);
  std::cout << "wrote " << (out / "psm.csv").string() << '\n';
  return 0;
}

int cmd_acf(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const auto& section = config.at("acf");
  const auto trace = read_trace_jsonl(section.at("trace").get<std::string>());
  std::vector<int> components;
  for (const auto& c : section.at("components")) components.push_back(c.get<int>() - 1);
  const auto series =
      acf_binary(trace, section.at("site").get<int>() - 1, components,
                 section.value("max_lag", 30), section.value("burn_in", 0));
  std::ofstream acf_out(out / "acf.csv");
  acf_out << "lag,value\n";
  for (int lag = 0; lag <= series.max_lag; ++lag) {
    acf_out << lag << ',' << format_double(series.values[lag]) << '\n';
  }
  std::cout << "wrote " << (out / "acf.csv").string() << '\n';
  return 0;
}

int cmd_detect(const CommonArgs& args) {
  const json config = load_merged_config(args);
  const fs::path out = prepare_out_dir(config);
  const Dataset data = resolve_dataset(config);
  const auto hp = parse_hyperparameters(config.at("hyperparameters"));
  const json section = config.value("detect", json::object());
  const auto allocation = resolve_allocation(
      section.contains("allocation") ? section : config, data.n());
  AllocationState state(data, hp, allocation);
  DetectThresholds thresholds;
  thresholds.tau = section.value("tau", 0.5);
  thresholds.rho_min = section.value("rho_min", 0.5);
  thresholds.max_block_size = section.value("max_block_size", 10);
  const auto block = detect_outlier_block(state, hp, thresholds);
  nlohmann::ordered_json report;
  report["block"] = json::array();
  for (int i : block) report["block"].push_back(i + 1);
  std::ofstream report_out(out / "block.json");
  report_out << report.dump() << '\n';
  std::cout << report.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blocked collapsed Gibbs sampling for Gaussian mixtures"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON experiment config")->required();
    sub->add_option("--seed", args.seed_override, "override the config seed");
    sub->add_option("--out", args.out_override, "override the output directory");
  };

  std::map<std::string, int (*)(const CommonArgs&)> handlers = {
      {"simulate", cmd_simulate},       {"sample", cmd_sample},
      {"analyze-pair", cmd_analyze_pair}, {"surface", cmd_surface},
      {"bound", cmd_bound},             {"psm", cmd_psm},
      {"acf", cmd_acf},                 {"detect-outliers", cmd_detect},
  };
  const std::map<std::string, std::string> descriptions = {
      {"simulate", "generate a mixture dataset with planted outliers"},
      {"sample", "run one or more Gibbs chains and write traces"},
      {"analyze-pair", "joint allocation table of a latent-variable pair"},
      {"surface", "pair-correlation surface over a distance grid"},
      {"bound", "convergence-rate lower bound for a latent pair"},
      {"psm", "posterior similarity matrix from a trace"},
      {"acf", "autocorrelation of an allocation indicator"},
      {"detect-outliers", "flag a correlated outlier block from a fitted state"},
  };
  for (const auto& [name, handler] : handlers) {
    add_common(app.add_subcommand(name, descriptions.at(name)));
  }

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return handlers.at(sub)(args);
  } catch (const Error& e) {
    json err;
    err["error"] = {{"module", e.module_name()}, {"op", e.op_name()}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"module", "cli"}, {"op", sub}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
}
