#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ppr/double_double.hpp"

namespace ppr {

// Separable Hamiltonian H(p, q) = 1/2 p^T M^{-1} p + U(q) with diagonal M.
//
// Systems that admit an energy transform split it as
//   Lambda(p, q) = [ p_i / sqrt(2 m_i) ; Lambda_q(q) ]
// with |Lambda_q(q)|^2 = U(q). Only the position block is system specific,
// so subclasses supply Lambda_q and its Jacobian.
class HamiltonianSystem {
 public:
  explicit HamiltonianSystem(std::vector<double> mass_diag);
  virtual ~HamiltonianSystem() = default;

  std::size_t dim() const { return mass_.size(); }
  const std::vector<double>& mass_diag() const { return mass_; }

  virtual std::string name() const = 0;

  virtual double potential(std::span<const double> q) const = 0;
  virtual void grad_potential(std::span<const double> q, std::span<double> out) const = 0;
  virtual void grad_potential(std::span<const DD> q, std::span<DD> out) const = 0;

  virtual bool has_energy_transform() const { return false; }
  // Length of Lambda_q(q); lambda_dim() = dim() + lambda_q_dim().
  virtual std::size_t lambda_q_dim() const;
  std::size_t lambda_dim() const { return dim() + lambda_q_dim(); }
  virtual void lambda_q(std::span<const double> q, std::span<double> out) const;
  // Row-major (lambda_q_dim x dim) Jacobian of Lambda_q.
  virtual void lambda_q_jacobian(std::span<const double> q, Eigen::MatrixXd& jac) const;
  // out = J(q)^T cot. Default goes through the dense Jacobian.
  virtual void lambda_q_vjp(std::span<const double> q, std::span<const double> cot,
                            std::span<double> out) const;

 protected:
  [[noreturn]] void throw_no_transform() const;

 private:
  std::vector<double> mass_;
};

using SystemPtr = std::shared_ptr<const HamiltonianSystem>;

// Chain of 2m unit masses with alternating stiff linear springs (frequency
// omega) and soft quartic springs; both chain ends are pinned (q_0 =
// q_{2m+1} = 0).
class FpuSystem final : public HamiltonianSystem {
 public:
  FpuSystem(int m, double omega);

  int m() const { return m_; }
  double omega() const { return omega_; }

  std::string name() const override { return "fpu"; }
  double potential(std::span<const double> q) const override;
  void grad_potential(std::span<const double> q, std::span<double> out) const override;
  void grad_potential(std::span<const DD> q, std::span<DD> out) const override;

  bool has_energy_transform() const override { return true; }
  std::size_t lambda_q_dim() const override { return static_cast<std::size_t>(2 * m_ + 1); }
  void lambda_q(std::span<const double> q, std::span<double> out) const override;
  void lambda_q_jacobian(std::span<const double> q, Eigen::MatrixXd& jac) const override;
  void lambda_q_vjp(std::span<const double> q, std::span<const double> cot,
                    std::span<double> out) const override;

 private:
  template <class T>
  void grad_impl(std::span<const T> q, std::span<T> out) const;

  int m_;
  double omega_;
};

// H = p^2/2 + q^2/2 with Lambda = (p/sqrt2, q/sqrt2).
class HarmonicOscillator final : public HamiltonianSystem {
 public:
  HarmonicOscillator();
  std::string name() const override { return "harmonic"; }
  double potential(std::span<const double> q) const override;
  void grad_potential(std::span<const double> q, std::span<double> out) const override;
  void grad_potential(std::span<const DD> q, std::span<DD> out) const override;
  bool has_energy_transform() const override { return true; }
  std::size_t lambda_q_dim() const override { return 1; }
  void lambda_q(std::span<const double> q, std::span<double> out) const override;
  void lambda_q_jacobian(std::span<const double> q, Eigen::MatrixXd& jac) const override;
};

// Planar Kepler problem, U = -1/|q|. Negative potential: no energy transform.
class KeplerSystem final : public HamiltonianSystem {
 public:
  KeplerSystem();
  std::string name() const override { return "kepler"; }
  double potential(std::span<const double> q) const override;
  void grad_potential(std::span<const double> q, std::span<double> out) const override;
  void grad_potential(std::span<const DD> q, std::span<DD> out) const override;
};

// U = 0 with arbitrary diagonal masses.
class FreeParticle final : public HamiltonianSystem {
 public:
  explicit FreeParticle(std::vector<double> mass_diag);
  std::string name() const override { return "free"; }
  double potential(std::span<const double>) const override { return 0.0; }
  void grad_potential(std::span<const double> q, std::span<double> out) const override;
  void grad_potential(std::span<const DD> q, std::span<DD> out) const override;
};

}  // namespace ppr
