#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ppr/errors.hpp"
#include "ppr/phase_state.hpp"
#include "ppr/propagator.hpp"
#include "ppr/system.hpp"

namespace ppr {

std::uint64_t splitmix64(std::uint64_t& state);

// Independent stream per (seed, stream id); chain i only ever sees Rng(seed, i).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  double normal();
  double uniform();  // [0, 1)
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

class ShellUnreachableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Moments of N(mu, sigma^2) conditioned on the draw being > lower.
double truncated_normal_mean(double mu, double sigma, double lower = 0.0);
double truncated_normal_variance(double mu, double sigma, double lower = 0.0);

// K' ~ N(mean, sigma^2) redrawn while K' <= 0.
double sample_kinetic_energy(double mean, double sigma, Rng& rng, int max_rejects);

// Uniform direction on the unit sphere in R^d (normalized Gaussian vector).
std::vector<double> sample_unit_sphere(std::size_t d, Rng& rng);

// p = sqrt(2K') M^{1/2} p~ with K' ~ N(H0 - U(q), sigma^2) truncated to K' > 0,
// so that p^T M^{-1} p / 2 = K'.
std::vector<double> sample_momentum_on_shell(const HamiltonianSystem& system, std::span<const double> q, double H0,
                                             double sigma, Rng& rng, int max_rejects = 10000);

enum class SamplerAlgo { hmc, traj_ensemble };

std::string to_string(SamplerAlgo a);
SamplerAlgo parse_sampler_algo(const std::string& text);

struct SamplerConfig {
  SamplerAlgo algo = SamplerAlgo::hmc;
  double H0 = 0.0;
  std::vector<double> q0;
  double sigma = 0.1;
  int n_chains = 1;  // hmc
  int n_trans = 1;
  int n_levelsets = 1;  // traj_ensemble
  int n_traj = 1;
  int L = 1;
  double delta_t = 0.1;
  PropagatorPtr flow;  // F_{delta t}
  std::uint64_t seed = 0;
  int max_rejects = 10000;
  unsigned workers = 1;

  void validate(const HamiltonianSystem& system) const;
};

struct SampleOrigin {
  int group = 0;  // chain id (hmc) or level-set id (traj_ensemble)
  int traj = 0;   // trajectory within the level set; 0 for hmc
  int step = 0;   // 1-based transition / flow step
  bool operator==(const SampleOrigin&) const = default;
};

struct SampleSet {
  std::vector<PhaseState> states;
  std::vector<SampleOrigin> origin;
  std::string algo;
  std::string flow;  // description of F_{delta t}
  double H0 = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return states.size(); }
};

SampleSet hmc_h0(const HamiltonianSystem& system, const SamplerConfig& config);
SampleSet traj_ensemble_h0(const HamiltonianSystem& system, const SamplerConfig& config);
SampleSet run_sampler(const HamiltonianSystem& system, const SamplerConfig& config);

// Inputs with their fine-solver continuations F^i u0, i = 1..S.
struct TrainingSet {
  std::vector<PhaseState> inputs;
  std::vector<std::vector<PhaseState>> targets;  // targets[n][i-1] = F^i inputs[n]
  int S = 0;
  std::size_t dropped = 0;
  std::string fine;

  std::size_t size() const { return inputs.size(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs.front().dim(); }
};

TrainingSet build_training_set(const std::vector<PhaseState>& inputs, const Propagator& fine, int S,
                               unsigned workers = 1);

// For each reference point, Euclidean distance to its nearest sample in R^{2d}.
std::vector<double> min_distance_diagnostic(const std::vector<PhaseState>& reference,
                                            const std::vector<PhaseState>& samples);

}  // namespace ppr
