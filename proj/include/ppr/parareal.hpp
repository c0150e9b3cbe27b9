#pragma once

#include <optional>
#include <vector>

#include "ppr/procrustes.hpp"
#include "ppr/propagator.hpp"

namespace ppr {

enum class PararealMode { plain, procrustes };

std::string to_string(PararealMode m);
PararealMode parse_parareal_mode(const std::string& text);

struct PararealConfig {
  int N = 1;       // number of intervals
  int K = 0;       // number of corrected rows (rows 1..K)
  double dt = 1.0;
  PropagatorPtr coarse;
  PropagatorPtr fine;
  PararealMode mode = PararealMode::plain;
  unsigned workers = 1;
  int n_trust = -1;  // trajectory errors reported for n <= n_trust; -1 means N/2
  CorrectorOptions corrector;

  void validate() const;
  int trusted_horizon() const { return n_trust < 0 ? N / 2 : n_trust; }
};

struct IterationStats {
  double coarse_seconds = 0.0;
  double fine_seconds = 0.0;
  double corrector_seconds = 0.0;
  double max_pinv_residual = 0.0;
  int max_pinv_iterations = 0;
};

// Grid of iterates u_n^(k), k = 0..K, n = 0..N.
struct PararealTableau {
  int N = 0;
  int K = 0;
  int n_trust = 0;
  std::vector<std::vector<PhaseState>> states;
  // correctors[k] produced row k+1 (procrustes mode only).
  std::vector<PhaseCorrector> correctors;
  // Per-cell errors against a reference; NaN where not evaluated.
  std::vector<std::vector<double>> traj_err;
  std::vector<std::vector<double>> energy_err;
  std::vector<IterationStats> stats;

  const PhaseState& at(int k, int n) const {
    return states[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
  }
};

// Element-wise propagation; the result does not depend on the worker count.
std::vector<PhaseState> fine_sweep(const std::vector<PhaseState>& states, const Propagator& solver, unsigned workers);

// u0 followed by `steps` sequential applications of the solver.
std::vector<PhaseState> sequential_trajectory(const Propagator& solver, const PhaseState& u0, int steps);

PararealTableau parareal_run(const HamiltonianSystem& system, const PhaseState& u0, const PararealConfig& config,
                             const std::vector<PhaseState>* reference = nullptr);

}  // namespace ppr
