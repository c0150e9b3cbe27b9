#include "ppr/phase_state.hpp"

#include <cmath>

#include "ppr/errors.hpp"

namespace ppr {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

PhaseState::PhaseState(std::vector<double> p, std::vector<double> q) : p_(std::move(p)), q_(std::move(q)) {
  if (p_.empty()) throw DimensionError("PhaseState: dimension must be >= 1");
  require_same_dim(p_.size(), q_.size(), "PhaseState");
  if (!all_finite(p_) || !all_finite(q_)) throw NumericalError("PhaseState: non-finite entry");
}

PhaseState PhaseState::zeros(std::size_t d) {
  return PhaseState(std::vector<double>(d, 0.0), std::vector<double>(d, 0.0));
}

PhaseState PhaseState::from_concat(std::span<const double> u) {
  if (u.size() % 2 != 0) throw DimensionError("PhaseState: concatenated length must be even");
  std::size_t d = u.size() / 2;
  return PhaseState(std::vector<double>(u.begin(), u.begin() + d), std::vector<double>(u.begin() + d, u.end()));
}

std::vector<double> PhaseState::concat() const {
  std::vector<double> u(p_);
  u.insert(u.end(), q_.begin(), q_.end());
  return u;
}

}  // namespace ppr
