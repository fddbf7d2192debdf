#pragma once

#include <string>

#include <json.hpp>

#include "blockgibbs/correlation.hpp"
#include "blockgibbs/model.hpp"
#include "blockgibbs/sampler.hpp"
#include "blockgibbs/simulate.hpp"

namespace blockgibbs {

/// Experiment configs are nested key-value JSON. The CLI merges flag
/// overrides on top and echoes the effective config into the output
/// directory. Indices and labels in config files are 1-based, matching the
/// on-disk formats.
nlohmann::json load_config(const std::string& path);
void save_config(const std::string& path, const nlohmann::json& config);

/// Checks required fields (seed) and that referenced paths exist.
void validate_config(const nlohmann::json& config);

Hyperparameters parse_hyperparameters(const nlohmann::json& hp_section);
SimulationSpec parse_simulation(const nlohmann::json& sim_section);
SamplerConfig parse_sampler(const nlohmann::json& sampler_section,
                            std::uint64_t seed);
SurfaceSpec parse_surface(const nlohmann::json& surface_section);

}  // namespace blockgibbs
