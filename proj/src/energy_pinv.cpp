#include "ppr/energy_pinv.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppr {

PinvConvergenceError::PinvConvergenceError(PinvResult best)
    : NumericalError([&] {
        std::ostringstream os;
        os << "energy_transform_pinv: no convergence after " << best.iterations
           << " iterations (residual " << best.residual << ")";
        return os.str();
      }()),
      best_(std::move(best)) {}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class PositionProblem {
 public:
  PositionProblem(const HamiltonianSystem& system, VectorXd target)
      : system_(system), target_(std::move(target)) {}

  VectorXd lambda(const VectorXd& q) const {
    VectorXd out(static_cast<Eigen::Index>(system_.lambda_q_dim()));
    system_.lambda_q(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())),
                     std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
  }
  VectorXd residual(const VectorXd& q) const { return lambda(q) - target_; }
  MatrixXd jacobian(const VectorXd& q) const {
    MatrixXd jac;
    system_.lambda_q_jacobian(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())), jac);
    return jac;
  }
  double target_energy() const { return target_.squaredNorm(); }

  // J^T J plus the residual-weighted second derivatives sum_i r_i Hess(Lambda_i),
  // the latter by central differences of J^T r. Without that term Gauss-Newton
  // crawls along directions where the soft-spring components are flat.
  MatrixXd newton_matrix(const VectorXd& q, const MatrixXd& jac, const VectorXd& r) const {
    const Eigen::Index n = q.size();
    MatrixXd curv(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6 * (1.0 + std::abs(q(j)));
      VectorXd qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      curv.col(j) = (jacobian(qp).transpose() * r - jacobian(qm).transpose() * r) / (2.0 * h);
    }
    return jac.transpose() * jac + 0.5 * (curv + curv.transpose());
  }

 private:
  const HamiltonianSystem& system_;
  VectorXd target_;
};

struct IterState {
  VectorXd q;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stationary = false;
};

MatrixXd marquardt_damping(const MatrixXd& normal, double mu) {
  VectorXd diag = normal.diagonal().cwiseAbs().cwiseMax(1e-12);
  return mu * diag.asDiagonal().toDenseMatrix();
}

// Gradient small in absolute terms, or small relative to |J||r| so that a
// nonzero-residual minimum is not chased at Gauss-Newton's linear rate.
bool first_order_stationary(const VectorXd& g, const MatrixXd& jac, double cost, double tol) {
  const double jn = jac.norm();
  return g.norm() <= std::max(tol * std::max(1.0, jn), 1e-10 * jn * cost);
}

bool tiny_step(const VectorXd& step, const VectorXd& q) { return step.norm() <= 1e-15 * (1.0 + q.norm()); }

IterState least_squares(const PositionProblem& prob, VectorXd q, const PinvOptions& opt) {
  IterState st;
  VectorXd r = prob.residual(q);
  st.cost = r.norm();
  double mu = 1e-3;
  for (; st.iterations < opt.max_iter; ++st.iterations) {
    if (st.cost <= opt.tol) {
      st.converged = true;
      break;
    }
    MatrixXd jac = prob.jacobian(q);
    VectorXd g = jac.transpose() * r;
    if (first_order_stationary(g, jac, st.cost, opt.tol)) {
      st.converged = st.stationary = true;
      break;
    }
    const MatrixXd normal = prob.newton_matrix(q, jac, r);
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::LDLT<MatrixXd> ldlt(normal + marquardt_damping(normal, mu));
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        mu *= 4.0;
        continue;
      }
      VectorXd step = ldlt.solve(-g);
      VectorXd qn = q + step;
      VectorXd rn = prob.residual(qn);
      double cn = rn.norm();
      if (std::isfinite(cn) && cn < st.cost) {
        accepted = true;
        bool small = tiny_step(step, q);
        q = std::move(qn);
        r = std::move(rn);
        st.cost = cn;
        mu = std::max(mu / 3.0, 1e-15);
        if (small && st.cost > opt.tol) {
          st.converged = st.stationary = true;
        }
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) {
      // No descent direction left at double resolution.
      st.converged = st.stationary = true;
      ++st.iterations;
      break;
    }
    if (st.stationary) {
      ++st.iterations;
      break;
    }
  }
  if (!st.converged && st.cost <= opt.tol) st.converged = true;
  st.q = std::move(q);
  return st;
}

// Newton projection onto |Lambda_q(q)|^2 = target energy along the gradient
// of the constraint. Returns false if the gradient vanishes.
bool project_to_shell(const PositionProblem& prob, VectorXd& q) {
  const double c0 = prob.target_energy();
  for (int it = 0; it < 50; ++it) {
    VectorXd lam = prob.lambda(q);
    double c = lam.squaredNorm() - c0;
    if (std::abs(c) <= 4e-16 * std::max(c0, 1e-300)) return true;
    VectorXd a = 2.0 * prob.jacobian(q).transpose() * lam;
    double aa = a.squaredNorm();
    if (!(aa > 0.0) || !std::isfinite(aa)) return false;
    q -= (c / aa) * a;
  }
  VectorXd lam = prob.lambda(q);
  return std::abs(lam.squaredNorm() - c0) <= 1e-13 * std::max(c0, 1.0);
}

IterState energy_shell(const PositionProblem& prob, VectorXd q, const PinvOptions& opt) {
  if (prob.target_energy() == 0.0) {
    IterState st = least_squares(prob, std::move(q), opt);
    return st;
  }
  if (!project_to_shell(prob, q)) {
    // Degenerate warm start (e.g. q = 0): reach the neighbourhood first.
    IterState pre = least_squares(prob, q, opt);
    q = pre.q;
    if (!project_to_shell(prob, q)) {
      pre.converged = false;
      return pre;
    }
  }
  IterState st;
  VectorXd r = prob.residual(q);
  st.cost = r.norm();
  double mu = 1e-3;
  const Eigen::Index n = q.size();
  for (; st.iterations < opt.max_iter; ++st.iterations) {
    if (st.cost <= opt.tol) {
      st.converged = true;
      break;
    }
    MatrixXd jac = prob.jacobian(q);
    VectorXd lam = prob.lambda(q);
    VectorXd a = 2.0 * jac.transpose() * lam;
    VectorXd g = jac.transpose() * r;
    VectorXd g_tan = g - (a.dot(g) / a.squaredNorm()) * a;
    if (first_order_stationary(g_tan, jac, st.cost, opt.tol)) {
      st.converged = st.stationary = true;
      break;
    }
    const MatrixXd normal = prob.newton_matrix(q, jac, r);
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      MatrixXd kkt = MatrixXd::Zero(n + 1, n + 1);
      kkt.topLeftCorner(n, n) = normal + marquardt_damping(normal, mu);
      kkt.topRightCorner(n, 1) = a;
      kkt.bottomLeftCorner(1, n) = a.transpose();
      VectorXd rhs(n + 1);
      rhs.head(n) = -g;
      rhs(n) = -(lam.squaredNorm() - prob.target_energy());
      VectorXd sol = kkt.fullPivLu().solve(rhs);
      VectorXd step = sol.head(n);
      VectorXd qn = q + step;
      if (!project_to_shell(prob, qn)) {
        mu *= 4.0;
        continue;
      }
      VectorXd rn = prob.residual(qn);
      double cn = rn.norm();
      if (std::isfinite(cn) && cn < st.cost) {
        accepted = true;
        bool small = tiny_step(qn - q, q);
        q = std::move(qn);
        r = std::move(rn);
        st.cost = cn;
        mu = std::max(mu / 3.0, 1e-15);
        if (small && st.cost > opt.tol) st.converged = st.stationary = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) {
      st.converged = st.stationary = true;
      ++st.iterations;
      break;
    }
    if (st.stationary) {
      ++st.iterations;
      break;
    }
  }
  if (!st.converged && st.cost <= opt.tol) st.converged = true;
  st.q = std::move(q);
  return st;
}

}  // namespace

PinvResult solve_energy_pinv(const HamiltonianSystem& system, const EnergyVector& target,
                             const PhaseState& warm_start, const PinvOptions& options) {
  if (!system.has_energy_transform()) {
    throw UnsupportedTransformError("system '" + system.name() + "' has no energy transform");
  }
  require_same_dim(target.v.size(), system.lambda_dim(), "energy_transform_pinv");
  require_same_dim(warm_start.dim(), system.dim(), "energy_transform_pinv");
  if (!(options.tol > 0.0)) throw ConfigError("energy_transform_pinv: tol must be positive");
  if (options.max_iter < 0) throw ConfigError("energy_transform_pinv: max_iter must be >= 0");
  if (!all_finite(target.v)) throw NumericalError("energy_transform_pinv: non-finite target");

  const std::size_t d = system.dim();
  const auto& mass = system.mass_diag();
  std::vector<double> p(d);
  for (std::size_t i = 0; i < d; ++i) p[i] = std::sqrt(2.0 * mass[i]) * target.v[i];

  VectorXd tq = Eigen::Map<const VectorXd>(target.v.data() + d, static_cast<Eigen::Index>(system.lambda_q_dim()));
  PositionProblem prob(system, std::move(tq));
  VectorXd q0 = Eigen::Map<const VectorXd>(warm_start.q().data(), static_cast<Eigen::Index>(d));
  const double initial = prob.residual(q0).norm();

  IterState st = options.mode == PinvMode::least_squares ? least_squares(prob, q0, options)
                                                         : energy_shell(prob, q0, options);
  std::vector<double> q(st.q.data(), st.q.data() + st.q.size());
  PinvResult result{PhaseState(std::move(p), std::move(q)), st.cost, initial, st.iterations, st.converged,
                    st.stationary};
  return result;
}

PhaseState energy_transform_pinv(const HamiltonianSystem& system, const EnergyVector& target,
                                 const PhaseState& warm_start, double tol, int max_iter) {
  PinvResult r = solve_energy_pinv(system, target, warm_start, PinvOptions{tol, max_iter, PinvMode::least_squares});
  if (!r.converged) throw PinvConvergenceError(std::move(r));
  return r.state;
}

}  // namespace ppr
