#include "ppr/resnet.hpp"

#include <cmath>

#include "ppr/errors.hpp"
#include "ppr/sampling.hpp"

namespace ppr {

double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

ResNetParams::ResNetParams(int L, int n, int d, bool scaled_skip) : L_(L), n_(n), d_(d), scaled_(scaled_skip) {
  if (L < 1 || n < 1 || d < 1) throw ConfigError("ResNet: L, n and d must be >= 1");
  std::size_t off = 0;
  for (int l = 0; l <= L_; ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(rows(l)) * static_cast<std::size_t>(cols(l) + 1);
  }
  theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

ResNetParams ResNetParams::he_init(int L, int n, int d, std::uint64_t seed, bool scaled_skip) {
  ResNetParams p(L, n, d, scaled_skip);
  Rng rng(seed, 0x6e6e);
  for (int l = 0; l <= L; ++l) {
    auto w = p.W(l);
    const double std_dev = std::sqrt(2.0 / p.cols(l));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = std_dev * rng.normal();
  }
  return p;
}

int ResNetParams::rows(int l) const { return l == L_ ? 2 * d_ : n_; }
int ResNetParams::cols(int l) const { return l == 0 ? 2 * d_ : n_; }

Eigen::Map<Eigen::MatrixXd> ResNetParams::W(int l) {
  return {theta.data() + w_offset(l), rows(l), cols(l)};
}
Eigen::Map<const Eigen::MatrixXd> ResNetParams::W(int l) const {
  return {theta.data() + w_offset(l), rows(l), cols(l)};
}
Eigen::Map<Eigen::VectorXd> ResNetParams::b(int l) {
  return {theta.data() + w_offset(l) + static_cast<std::size_t>(rows(l)) * static_cast<std::size_t>(cols(l)), rows(l)};
}
Eigen::Map<const Eigen::VectorXd> ResNetParams::b(int l) const {
  return {theta.data() + w_offset(l) + static_cast<std::size_t>(rows(l)) * static_cast<std::size_t>(cols(l)), rows(l)};
}

bool ResNetParams::same_shape(const ResNetParams& o) const {
  return L_ == o.L_ && n_ == o.n_ && d_ == o.d_ && scaled_ == o.scaled_;
}

Eigen::MatrixXd forward_batch(const ResNetParams& params, const Eigen::MatrixXd& X) {
  if (X.rows() != params.io_dim()) throw DimensionError("ResNet forward: input width does not match 2d");
  const int L = params.L();
  Eigen::MatrixXd y = ((params.W(0) * X).colwise() + params.b(0)).unaryExpr(&elu);
  const double s = params.skip_scale();
  for (int l = 1; l < L; ++l) {
    Eigen::MatrixXd z = (params.W(l) * y).colwise() + params.b(l);
    y += s * z.unaryExpr(&elu);
  }
  return (params.W(L) * y).colwise() + params.b(L);
}

PhaseState forward(const ResNetParams& params, const PhaseState& u) {
  const auto x = u.concat();
  Eigen::MatrixXd X = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::MatrixXd out = forward_batch(params, X);
  if (!out.allFinite()) throw NumericalError("ResNet forward: non-finite output");
  return PhaseState::from_concat(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
}

Rollout rollout(const ResNetParams& params, const PhaseState& u0, int steps) {
  if (steps < 0) throw ConfigError("rollout: steps must be >= 0");
  Rollout r;
  r.states.push_back(u0);
  for (int i = 1; i <= steps; ++i) {
    try {
      r.states.push_back(forward(params, r.states.back()));
    } catch (const NumericalError&) {
      r.truncated_at = i;
      break;
    }
  }
  return r;
}

NnPropagator::NnPropagator(ResNetParams params, double dt) : params_(std::move(params)), dt_(dt) {
  if (!(dt_ > 0.0)) throw ConfigError("NnPropagator: dt must be positive");
}

PhaseState NnPropagator::propagate(const PhaseState& u) const { return forward(params_, u); }

std::string NnPropagator::describe() const {
  return "ResNet(" + std::to_string(params_.L()) + ", " + std::to_string(params_.width()) + ")";
}

}  // namespace ppr
