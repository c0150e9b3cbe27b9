#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "ppr/integrators.hpp"
#include "ppr/parareal.hpp"
#include "ppr/propagator.hpp"
#include "ppr/sampling.hpp"
#include "ppr/system.hpp"
#include "ppr/training.hpp"

namespace ppr {

using nlohmann::json;

// JSON config file; relative paths inside it resolve against `base_dir`.
struct ExperimentConfig {
  json doc;
  std::filesystem::path base_dir;
  std::optional<std::uint64_t> seed_override;
  unsigned workers = 1;

  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig from_json(json doc, std::filesystem::path base_dir = ".");

  std::uint64_t seed() const;
  std::filesystem::path resolve(const std::string& p) const;
  const json& at(const std::string& key) const;
};

// {"system": "fpu", "m": 3, "omega": 50}; also accepts {"system": {...}}.
SystemPtr system_from_json(const json& j);

// {"scheme": "css4", "h": "2^-9", "precision": "dd"}
IntegratorSpec integrator_spec_from_json(const json& j);
json to_json(const IntegratorSpec& spec);

// Integrator spec, or {"checkpoint": "net.ckpt"} for a trained network.
PropagatorPtr solver_from_json(const json& j, const SystemPtr& system, double dt, const ExperimentConfig& cfg);

// "u0" omitted or "fpu_standard" gives the standard FPU start; otherwise {"p": [...], "q": [...]}.
PhaseState initial_state_from_json(const json* j, const HamiltonianSystem& system);

PinvOptions pinv_options_from_json(const json* j);
PararealConfig parareal_config_from_json(const json& j, const SystemPtr& system, const ExperimentConfig& cfg);
SamplerConfig sampler_config_from_json(const json& j, const SystemPtr& system, const ExperimentConfig& cfg);
TrainConfig train_config_from_json(const json& j, const ExperimentConfig& cfg);
json to_json(const TrainConfig& c);

}  // namespace ppr
