#include "ppr/system.hpp"

#include <algorithm>
#include <cmath>

#include "ppr/errors.hpp"

namespace ppr {

HamiltonianSystem::HamiltonianSystem(std::vector<double> mass_diag) : mass_(std::move(mass_diag)) {
  if (mass_.empty()) throw DimensionError("HamiltonianSystem: dimension must be >= 1");
  for (double m : mass_) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("HamiltonianSystem: masses must be positive");
  }
}

void HamiltonianSystem::throw_no_transform() const {
  throw UnsupportedTransformError("system '" + name() + "' has no energy transform");
}

std::size_t HamiltonianSystem::lambda_q_dim() const { throw_no_transform(); }

void HamiltonianSystem::lambda_q(std::span<const double>, std::span<double>) const { throw_no_transform(); }

void HamiltonianSystem::lambda_q_jacobian(std::span<const double>, Eigen::MatrixXd&) const {
  throw_no_transform();
}

void HamiltonianSystem::lambda_q_vjp(std::span<const double> q, std::span<const double> cot,
                                     std::span<double> out) const {
  Eigen::MatrixXd jac;
  lambda_q_jacobian(q, jac);
  Eigen::Map<const Eigen::VectorXd> c(cot.data(), static_cast<Eigen::Index>(cot.size()));
  Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = jac.transpose() * c;
}

// ---------------------------------------------------------------------------
// FPU

FpuSystem::FpuSystem(int m, double omega)
    : HamiltonianSystem(std::vector<double>(static_cast<std::size_t>(m > 0 ? 2 * m : 0), 1.0)),
      m_(m),
      omega_(omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("FpuSystem: omega must be positive");
}

namespace {

// Chain helpers over 0-based storage; positions q_0 and q_{2m+1} are the
// pinned ends and read as zero.
template <class T>
T chain_at(std::span<const T> q, int one_based) {
  if (one_based <= 0 || one_based > static_cast<int>(q.size())) return T(0.0);
  return q[static_cast<std::size_t>(one_based - 1)];
}

}  // namespace

double FpuSystem::potential(std::span<const double> q) const {
  require_same_dim(q.size(), dim(), "FpuSystem::potential");
  double stiff = 0.0;
  for (int i = 1; i <= m_; ++i) {
    double d = chain_at(q, 2 * i) - chain_at(q, 2 * i - 1);
    stiff += d * d;
  }
  double soft = 0.0;
  for (int i = 0; i <= m_; ++i) {
    double d = chain_at(q, 2 * i + 1) - chain_at(q, 2 * i);
    double d2 = d * d;
    soft += d2 * d2;
  }
  return 0.25 * omega_ * omega_ * stiff + soft;
}

template <class T>
void FpuSystem::grad_impl(std::span<const T> q, std::span<T> out) const {
  require_same_dim(q.size(), dim(), "FpuSystem::grad_potential");
  require_same_dim(out.size(), dim(), "FpuSystem::grad_potential");
  const T half_w2 = T(0.5 * omega_ * omega_);
  for (int i = 1; i <= m_; ++i) {
    T f = half_w2 * (q[2 * i - 1] - q[2 * i - 2]);
    out[2 * i - 1] = f;
    out[2 * i - 2] = -f;
  }
  for (int i = 0; i <= m_; ++i) {
    T d = chain_at(q, 2 * i + 1) - chain_at(q, 2 * i);
    T f = d * d * d * 4.0;
    if (2 * i + 1 <= 2 * m_) out[2 * i] += f;
    if (2 * i >= 1) out[2 * i - 1] -= f;
  }
}

void FpuSystem::grad_potential(std::span<const double> q, std::span<double> out) const { grad_impl(q, out); }
void FpuSystem::grad_potential(std::span<const DD> q, std::span<DD> out) const { grad_impl(q, out); }

void FpuSystem::lambda_q(std::span<const double> q, std::span<double> out) const {
  require_same_dim(q.size(), dim(), "FpuSystem::lambda_q");
  require_same_dim(out.size(), lambda_q_dim(), "FpuSystem::lambda_q");
  for (int i = 1; i <= m_; ++i) out[i - 1] = 0.5 * omega_ * (chain_at(q, 2 * i) - chain_at(q, 2 * i - 1));
  for (int i = 0; i <= m_; ++i) {
    double d = chain_at(q, 2 * i + 1) - chain_at(q, 2 * i);
    out[m_ + i] = d * d;
  }
}

void FpuSystem::lambda_q_jacobian(std::span<const double> q, Eigen::MatrixXd& jac) const {
  require_same_dim(q.size(), dim(), "FpuSystem::lambda_q_jacobian");
  const int d = 2 * m_;
  jac.setZero(2 * m_ + 1, d);
  for (int i = 1; i <= m_; ++i) {
    jac(i - 1, 2 * i - 1) = 0.5 * omega_;
    jac(i - 1, 2 * i - 2) = -0.5 * omega_;
  }
  for (int i = 0; i <= m_; ++i) {
    double s = 2.0 * (chain_at(q, 2 * i + 1) - chain_at(q, 2 * i));
    if (2 * i + 1 <= d) jac(m_ + i, 2 * i) = s;
    if (2 * i >= 1) jac(m_ + i, 2 * i - 1) = -s;
  }
}

void FpuSystem::lambda_q_vjp(std::span<const double> q, std::span<const double> cot,
                             std::span<double> out) const {
  require_same_dim(cot.size(), lambda_q_dim(), "FpuSystem::lambda_q_vjp");
  require_same_dim(out.size(), dim(), "FpuSystem::lambda_q_vjp");
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 1; i <= m_; ++i) {
    double c = 0.5 * omega_ * cot[i - 1];
    out[2 * i - 1] += c;
    out[2 * i - 2] -= c;
  }
  for (int i = 0; i <= m_; ++i) {
    double c = 2.0 * (chain_at(q, 2 * i + 1) - chain_at(q, 2 * i)) * cot[m_ + i];
    if (2 * i + 1 <= 2 * m_) out[2 * i] += c;
    if (2 * i >= 1) out[2 * i - 1] -= c;
  }
}

// ---------------------------------------------------------------------------
// Harmonic oscillator

HarmonicOscillator::HarmonicOscillator() : HamiltonianSystem({1.0}) {}

double HarmonicOscillator::potential(std::span<const double> q) const {
  require_same_dim(q.size(), 1, "HarmonicOscillator::potential");
  return 0.5 * q[0] * q[0];
}

void HarmonicOscillator::grad_potential(std::span<const double> q, std::span<double> out) const {
  out[0] = q[0];
}

void HarmonicOscillator::grad_potential(std::span<const DD> q, std::span<DD> out) const { out[0] = q[0]; }

void HarmonicOscillator::lambda_q(std::span<const double> q, std::span<double> out) const {
  out[0] = q[0] / std::sqrt(2.0);
}

void HarmonicOscillator::lambda_q_jacobian(std::span<const double>, Eigen::MatrixXd& jac) const {
  jac.setConstant(1, 1, 1.0 / std::sqrt(2.0));
}

// ---------------------------------------------------------------------------
// Kepler

KeplerSystem::KeplerSystem() : HamiltonianSystem({1.0, 1.0}) {}

double KeplerSystem::potential(std::span<const double> q) const {
  require_same_dim(q.size(), 2, "KeplerSystem::potential");
  return -1.0 / std::hypot(q[0], q[1]);
}

void KeplerSystem::grad_potential(std::span<const double> q, std::span<double> out) const {
  double r2 = q[0] * q[0] + q[1] * q[1];
  double r3 = r2 * std::sqrt(r2);
  out[0] = q[0] / r3;
  out[1] = q[1] / r3;
}

void KeplerSystem::grad_potential(std::span<const DD> q, std::span<DD> out) const {
  DD r2 = q[0] * q[0] + q[1] * q[1];
  DD r3 = r2 * sqrt(r2);
  out[0] = q[0] / r3;
  out[1] = q[1] / r3;
}

// ---------------------------------------------------------------------------
// Free particle

FreeParticle::FreeParticle(std::vector<double> mass_diag) : HamiltonianSystem(std::move(mass_diag)) {}

void FreeParticle::grad_potential(std::span<const double>, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
}

void FreeParticle::grad_potential(std::span<const DD>, std::span<DD> out) const {
  std::fill(out.begin(), out.end(), DD(0.0));
}

}  // namespace ppr
