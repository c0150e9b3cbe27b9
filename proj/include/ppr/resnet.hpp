#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ppr/phase_state.hpp"
#include "ppr/propagator.hpp"

namespace ppr {

double elu(double x);
double elu_derivative(double x);

// ResNet(L, n) on R^{2d}. All weights and biases live in one flat vector
// `theta`, layer by layer (W column-major, then b), so optimizers and
// finite-difference checks can treat them uniformly.
class ResNetParams {
 public:
  ResNetParams() = default;
  ResNetParams(int L, int n, int d, bool scaled_skip = true);

  // He-style N(0, 2/fan_in) weights, zero biases.
  static ResNetParams he_init(int L, int n, int d, std::uint64_t seed, bool scaled_skip = true);

  int L() const { return L_; }
  int width() const { return n_; }
  int d() const { return d_; }
  int io_dim() const { return 2 * d_; }
  bool scaled_skip() const { return scaled_; }
  double skip_scale() const { return scaled_ ? 1.0 / L_ : 1.0; }
  int layers() const { return L_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(theta.size()); }

  // Layer index l = 0..L, input layer first.
  Eigen::Map<Eigen::MatrixXd> W(int l);
  Eigen::Map<const Eigen::MatrixXd> W(int l) const;
  Eigen::Map<Eigen::VectorXd> b(int l);
  Eigen::Map<const Eigen::VectorXd> b(int l) const;
  int rows(int l) const;
  int cols(int l) const;

  bool same_shape(const ResNetParams& other) const;

  Eigen::VectorXd theta;

 private:
  std::size_t w_offset(int l) const { return offsets_[static_cast<std::size_t>(l)]; }

  int L_ = 0, n_ = 0, d_ = 0;
  bool scaled_ = true;
  std::vector<std::size_t> offsets_;
};

// Columns of X are states [p; q].
Eigen::MatrixXd forward_batch(const ResNetParams& params, const Eigen::MatrixXd& X);
PhaseState forward(const ResNetParams& params, const PhaseState& u);

struct Rollout {
  std::vector<PhaseState> states;  // u0 followed by successful steps
  int truncated_at = -1;           // first step that produced a non-finite state
};

Rollout rollout(const ResNetParams& params, const PhaseState& u0, int steps);

class NnPropagator final : public Propagator {
 public:
  NnPropagator(ResNetParams params, double dt);
  PhaseState propagate(const PhaseState& u) const override;
  double dt() const override { return dt_; }
  std::string describe() const override;
  const ResNetParams& params() const { return params_; }

 private:
  ResNetParams params_;
  double dt_;
};

}  // namespace ppr
