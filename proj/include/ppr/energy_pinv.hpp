#pragma once

#include <optional>

#include "ppr/errors.hpp"
#include "ppr/phase_core.hpp"

namespace ppr {

// How positions are recovered from the position block of an energy vector.
enum class PinvMode {
  // Local minimizer of |Lambda_q(q) - target_q|^2.
  least_squares,
  // Same objective restricted to the level set U(q) = |target_q|^2, so the
  // recovered state has exactly the energy |target|^2.
  energy_shell,
};

struct PinvOptions {
  double tol = 1e-12;  // absolute residual (or projected-gradient) threshold
  int max_iter = 50;
  PinvMode mode = PinvMode::least_squares;
};

struct PinvResult {
  PhaseState state;
  double residual = 0.0;          // |Lambda_q(q*) - target_q|
  double initial_residual = 0.0;  // same quantity at the warm start
  int iterations = 0;
  bool converged = false;
  bool stationary = false;  // converged at a nonzero-residual critical point
};

class PinvConvergenceError : public NumericalError {
 public:
  explicit PinvConvergenceError(PinvResult best);
  const PinvResult& best() const { return best_; }

 private:
  PinvResult best_;
};

// Momenta are recovered exactly from the momentum block; positions by a
// damped Gauss-Newton iteration seeded at warm_start.q(). Never throws on
// non-convergence; inspect result.converged.
PinvResult solve_energy_pinv(const HamiltonianSystem& system, const EnergyVector& target,
                             const PhaseState& warm_start, const PinvOptions& options = {});

// Throwing form: PinvConvergenceError (carrying the best iterate) when the
// iteration neither reaches tol nor a stationary point within max_iter.
PhaseState energy_transform_pinv(const HamiltonianSystem& system, const EnergyVector& target,
                                 const PhaseState& warm_start, double tol = 1e-12, int max_iter = 50);

}  // namespace ppr
