#pragma once

#include <vector>

#include "ppr/phase_state.hpp"
#include "ppr/system.hpp"

namespace ppr {

// Image of the energy transform; |v|^2 equals the Hamiltonian.
struct EnergyVector {
  std::vector<double> v;

  double squared_norm() const;
};

struct VectorField {
  std::vector<double> dq;
  std::vector<double> dp;
};

double hamiltonian(const HamiltonianSystem& system, const PhaseState& u);

// dq = M^{-1} p, dp = -grad U(q).
VectorField hamiltonian_vector_field(const HamiltonianSystem& system, const PhaseState& u);

EnergyVector energy_transform(const HamiltonianSystem& system, const PhaseState& u);

// sqrt(|p - p_ref|^2 + |q - q_ref|^2)
double trajectory_error(const PhaseState& u, const PhaseState& u_ref);

// |H(u) - H(u_ref)| / |H(u_ref)|; NumericalError when H(u_ref) == 0.
double energy_error(const HamiltonianSystem& system, const PhaseState& u, const PhaseState& u_ref);

// Harmonic energies of the stiff springs in the relative coordinates
// y_j = (q_{2j} - q_{2j-1})/sqrt2, followed by their total (length m+1).
std::vector<double> stiff_spring_energies(const FpuSystem& system, const PhaseState& u);

// Standard FPU start: one excited stiff spring,
// p = (0, sqrt2, 0, ...), q = ((1 - 1/w)/sqrt2, (1 + 1/w)/sqrt2, 0, ...),
// whose energy is 2 + 3 w^-2 + w^-4 / 2.
PhaseState fpu_initial_state(const FpuSystem& system);

}  // namespace ppr
