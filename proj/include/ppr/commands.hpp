#pragma once

#include <filesystem>

#include "ppr/config.hpp"

namespace ppr {

// Each command writes its outputs plus manifest.json into `out`.
void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_parareal(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_sample(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_eval_nn(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_bench(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace ppr
