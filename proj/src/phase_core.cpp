#include "ppr/phase_core.hpp"

#include <cmath>

#include "ppr/errors.hpp"

namespace ppr {

double EnergyVector::squared_norm() const {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double hamiltonian(const HamiltonianSystem& system, const PhaseState& u) {
  require_same_dim(u.dim(), system.dim(), "hamiltonian");
  const auto& mass = system.mass_diag();
  double kinetic = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) kinetic += u.p()[i] * u.p()[i] / mass[i];
  return 0.5 * kinetic + system.potential(u.q());
}

VectorField hamiltonian_vector_field(const HamiltonianSystem& system, const PhaseState& u) {
  require_same_dim(u.dim(), system.dim(), "hamiltonian_vector_field");
  VectorField f{std::vector<double>(u.dim()), std::vector<double>(u.dim())};
  const auto& mass = system.mass_diag();
  for (std::size_t i = 0; i < u.dim(); ++i) f.dq[i] = u.p()[i] / mass[i];
  system.grad_potential(std::span<const double>(u.q()), std::span<double>(f.dp));
  for (double& x : f.dp) x = -x;
  return f;
}

EnergyVector energy_transform(const HamiltonianSystem& system, const PhaseState& u) {
  if (!system.has_energy_transform()) {
    throw UnsupportedTransformError("system '" + system.name() + "' has no energy transform");
  }
  require_same_dim(u.dim(), system.dim(), "energy_transform");
  const std::size_t d = system.dim();
  EnergyVector out{std::vector<double>(system.lambda_dim())};
  const auto& mass = system.mass_diag();
  for (std::size_t i = 0; i < d; ++i) out.v[i] = u.p()[i] / std::sqrt(2.0 * mass[i]);
  system.lambda_q(u.q(), std::span<double>(out.v).subspan(d));
  return out;
}

double trajectory_error(const PhaseState& u, const PhaseState& u_ref) {
  require_same_dim(u.dim(), u_ref.dim(), "trajectory_error");
  double s = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    double dp = u.p()[i] - u_ref.p()[i];
    double dq = u.q()[i] - u_ref.q()[i];
    s += dp * dp + dq * dq;
  }
  return std::sqrt(s);
}

double energy_error(const HamiltonianSystem& system, const PhaseState& u, const PhaseState& u_ref) {
  double h_ref = hamiltonian(system, u_ref);
  if (h_ref == 0.0) throw NumericalError("energy_error: reference energy is zero");
  return std::abs(hamiltonian(system, u) - h_ref) / std::abs(h_ref);
}

std::vector<double> stiff_spring_energies(const FpuSystem& system, const PhaseState& u) {
  require_same_dim(u.dim(), system.dim(), "stiff_spring_energies");
  const int m = system.m();
  const double w = system.omega();
  std::vector<double> out(static_cast<std::size_t>(m + 1), 0.0);
  for (int j = 1; j <= m; ++j) {
    double y = (u.q()[2 * j - 1] - u.q()[2 * j - 2]) / std::sqrt(2.0);
    double ydot = (u.p()[2 * j - 1] - u.p()[2 * j - 2]) / std::sqrt(2.0);
    double e = 0.5 * (ydot * ydot + w * w * y * y);
    out[j - 1] = e;
    out[m] += e;
  }
  return out;
}

PhaseState fpu_initial_state(const FpuSystem& system) {
  const std::size_t d = system.dim();
  const double inv_w = 1.0 / system.omega();
  std::vector<double> p(d, 0.0);
  std::vector<double> q(d, 0.0);
  p[1] = std::sqrt(2.0);
  q[0] = (1.0 - inv_w) / std::sqrt(2.0);
  q[1] = (1.0 + inv_w) / std::sqrt(2.0);
  return PhaseState(std::move(p), std::move(q));
}

}  // namespace ppr
