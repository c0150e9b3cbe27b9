#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ppr {

// Momentum/position pair (p, q) of a d-dimensional system. Always has
// matching lengths d >= 1 and finite entries.
class PhaseState {
 public:
  PhaseState(std::vector<double> p, std::vector<double> q);

  static PhaseState zeros(std::size_t d);
  // Splits u = [p; q] of length 2d.
  static PhaseState from_concat(std::span<const double> u);

  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& q() const { return q_; }
  std::size_t dim() const { return p_.size(); }

  std::vector<double> concat() const;

  friend bool operator==(const PhaseState&, const PhaseState&) = default;

 private:
  std::vector<double> p_;
  std::vector<double> q_;
};

bool all_finite(std::span<const double> v);

}  // namespace ppr
