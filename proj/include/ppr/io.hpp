#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppr/phase_state.hpp"
#include "ppr/resnet.hpp"
#include "ppr/sampling.hpp"

namespace ppr {

using nlohmann::json;
namespace fs = std::filesystem;

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

// Shortest-safe round-trip decimal (17 significant digits).
std::string format_double(double x);
double parse_double(const std::string& text);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// Rows [p_1..p_d, q_1..q_d]; an optional leading column block (e.g. n, t)
// is written before each state.
void write_states_csv(const fs::path& path, const std::vector<PhaseState>& states,
                      const std::vector<std::string>& lead_names = {},
                      const std::vector<std::vector<double>>& lead_values = {});
std::vector<PhaseState> read_states_csv(const fs::path& path, std::size_t lead_columns = 0);

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const fs::path& path);

// log10 of each cell; exact zeros map to the sentinel, NaN stays NaN.
constexpr double kLog10ZeroSentinel = -16.0;
std::vector<std::vector<double>> log10_grid(const std::vector<std::vector<double>>& values);
void write_grid_csv(const fs::path& path, const std::vector<std::vector<double>>& grid, const std::string& comment);

// Dataset file: one JSON header line, then CSV rows u0 followed by the S targets.
// S = 0 stores bare samples.
void save_dataset(const fs::path& path, const TrainingSet& data, const json& config);
void save_samples(const fs::path& path, const SampleSet& samples, const json& config);
struct LoadedDataset {
  TrainingSet data;
  json header;
};
LoadedDataset load_dataset(const fs::path& path);

// Checkpoint: JSON header line (with the SHA-256 of the body) followed by
// CSV blocks, one per W and b, in layer order and row-major.
void save_checkpoint(const fs::path& path, const ResNetParams& params, const json& train_config);
struct LoadedCheckpoint {
  ResNetParams params;
  json header;
};
LoadedCheckpoint load_checkpoint(const fs::path& path);
std::string serialize_checkpoint(const ResNetParams& params, const json& train_config);
LoadedCheckpoint parse_checkpoint(const std::string& text);

// manifest.json: config snapshot, input hash, tool version, phase timings and
// every other file under `dir` with size and checksum.
void write_manifest(const fs::path& dir, const json& config, const std::map<std::string, double>& timings);

}  // namespace ppr
