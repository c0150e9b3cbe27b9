#include "ppr/procrustes.hpp"

#include <Eigen/SVD>
#include <limits>

namespace ppr {

AlignmentData AlignmentData::from_states(const HamiltonianSystem& system, const std::vector<PhaseState>& fine_states,
                                         const std::vector<PhaseState>& coarse_states) {
  require_same_dim(fine_states.size(), coarse_states.size(), "AlignmentData");
  const auto rows = static_cast<Eigen::Index>(system.lambda_dim());
  const auto cols = static_cast<Eigen::Index>(fine_states.size());
  AlignmentData data{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
  for (Eigen::Index n = 0; n < cols; ++n) {
    EnergyVector f = energy_transform(system, fine_states[static_cast<std::size_t>(n)]);
    EnergyVector g = energy_transform(system, coarse_states[static_cast<std::size_t>(n)]);
    data.fine.col(n) = Eigen::Map<const Eigen::VectorXd>(f.v.data(), rows);
    data.coarse.col(n) = Eigen::Map<const Eigen::VectorXd>(g.v.data(), rows);
  }
  return data;
}

void AlignmentData::validate() const {
  if (fine.rows() != coarse.rows() || fine.cols() != coarse.cols()) {
    throw DimensionError("AlignmentData: F and G must have the same shape");
  }
  if (fine.cols() < 1 || fine.rows() < 1) throw DimensionError("AlignmentData: need at least one column");
  if (!fine.allFinite() || !coarse.allFinite()) throw NumericalError("AlignmentData: non-finite column");
}

PhaseCorrector PhaseCorrector::identity(std::size_t lambda_dim) {
  const auto n = static_cast<Eigen::Index>(lambda_dim);
  PhaseCorrector c{Eigen::MatrixXd::Identity(n, n), {}};
  return c;
}

double alignment_residual(const AlignmentData& data, const Eigen::MatrixXd& omega) {
  return (data.fine - omega * data.coarse).norm();
}

PhaseCorrector solve_procrustes(const AlignmentData& data) {
  data.validate();
  const Eigen::MatrixXd correlation = data.fine * data.coarse.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(correlation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("solve_procrustes: SVD failed");

  PhaseCorrector c;
  c.omega = svd.matrixU() * svd.matrixV().transpose();
  const auto& sv = svd.singularValues();
  c.diagnostics.min_singular_value = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  const double cutoff = (sv.size() > 0 ? sv(0) : 0.0) * static_cast<double>(correlation.rows()) *
                        std::numeric_limits<double>::epsilon();
  c.diagnostics.full_rank = sv.size() > 0 && c.diagnostics.min_singular_value > cutoff;
  c.diagnostics.residual_before = (data.fine - data.coarse).norm();
  c.diagnostics.residual_after = alignment_residual(data, c.omega);
  return c;
}

PinvResult apply_corrector_detailed(const PhaseCorrector& corrector, const HamiltonianSystem& system,
                                    const PhaseState& u, const CorrectorOptions& options) {
  EnergyVector lam = energy_transform(system, u);
  const auto n = static_cast<Eigen::Index>(lam.v.size());
  if (corrector.omega.rows() != n || corrector.omega.cols() != n) {
    throw DimensionError("apply_corrector: corrector size does not match the energy transform");
  }
  Eigen::VectorXd rotated = corrector.omega * Eigen::Map<const Eigen::VectorXd>(lam.v.data(), n);
  EnergyVector target{std::vector<double>(rotated.data(), rotated.data() + n)};
  return solve_energy_pinv(system, target, u, options.pinv);
}

PhaseState apply_corrector(const PhaseCorrector& corrector, const HamiltonianSystem& system, const PhaseState& u,
                           double pinv_tol, int pinv_max_iter, PinvMode mode) {
  PinvResult r = apply_corrector_detailed(corrector, system, u, CorrectorOptions{{pinv_tol, pinv_max_iter, mode}});
  if (!r.converged) throw PinvConvergenceError(std::move(r));
  return r.state;
}

}  // namespace ppr
