#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ppr/energy_pinv.hpp"

namespace ppr {

// Columns f_n = Lambda(fine output), g_n = Lambda(coarse output).
struct AlignmentData {
  Eigen::MatrixXd fine;
  Eigen::MatrixXd coarse;

  static AlignmentData from_states(const HamiltonianSystem& system, const std::vector<PhaseState>& fine_states,
                                   const std::vector<PhaseState>& coarse_states);
  void validate() const;
};

struct CorrectorDiagnostics {
  double residual_before = 0.0;  // |F - G|_F
  double residual_after = 0.0;   // |F - Omega G|_F
  double min_singular_value = 0.0;
  bool full_rank = true;
};

// Orthogonal Omega acting on energy vectors; the phase corrector is
// Psi = Lambda^+ o Omega o Lambda.
struct PhaseCorrector {
  Eigen::MatrixXd omega;
  CorrectorDiagnostics diagnostics;

  static PhaseCorrector identity(std::size_t lambda_dim);
};

double alignment_residual(const AlignmentData& data, const Eigen::MatrixXd& omega);

// Omega = U V^T from the SVD of F G^T. A rank-deficient F G^T still yields
// an orthogonal minimizer and is flagged in the diagnostics.
PhaseCorrector solve_procrustes(const AlignmentData& data);

struct CorrectorOptions {
  PinvOptions pinv{1e-12, 50, PinvMode::energy_shell};
};

// Lambda^+(Omega Lambda(u)) with u as the warm start; never throws on
// non-convergence.
PinvResult apply_corrector_detailed(const PhaseCorrector& corrector, const HamiltonianSystem& system,
                                    const PhaseState& u, const CorrectorOptions& options = {});

// Throws PinvConvergenceError when the position recovery does not converge.
PhaseState apply_corrector(const PhaseCorrector& corrector, const HamiltonianSystem& system, const PhaseState& u,
                           double pinv_tol = 1e-12, int pinv_max_iter = 50,
                           PinvMode mode = PinvMode::energy_shell);

}  // namespace ppr
