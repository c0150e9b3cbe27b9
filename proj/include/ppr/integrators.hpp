#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppr/double_double.hpp"
#include "ppr/phase_state.hpp"
#include "ppr/system.hpp"

namespace ppr {

enum class Scheme { vv, css4, kl8 };
enum class Precision { f64, dd };

std::string to_string(Scheme s);
std::string to_string(Precision p);
Scheme parse_scheme(const std::string& text);
Precision parse_precision(const std::string& text);

// Parses a substep size: exact dyadic "2^-9", integer powers "5^-6", or a
// plain decimal.
double parse_step_size(const std::string& text);

struct IntegratorSpec {
  Scheme scheme = Scheme::css4;
  double h = 1.0 / 512.0;
  Precision precision = Precision::f64;

  std::string describe() const;
};

// Stage weights gamma_i of a symmetric composition of the velocity Verlet
// step: Phi_h = S_{gamma_s h} o ... o S_{gamma_1 h}.
struct CompositionCoefficients {
  std::vector<DD> stages;
  int order = 2;
  std::string source;

  // Throws ConfigError unless sum(gamma) = 1 and the weights are palindromic.
  void validate() const;
};

const CompositionCoefficients& kahan_li_s17_order8();
const CompositionCoefficients& velocity_verlet_single_stage();

// Explicit splitting method K(b_0) D(a_0) K(b_1) ... D(a_{s-1}) K(b_s), where
// K(b) is the momentum kick p -= b h grad U(q) and D(a) the drift
// q += a h M^{-1} p. Zero coefficients are skipped.
struct SplittingTableau {
  std::vector<DD> kick;
  std::vector<DD> drift;
  int order = 2;
  std::string name;
};

SplittingTableau composition_tableau(const CompositionCoefficients& coeffs);
// Optimized 4th-order symplectic RKN method of Calvo and Sanz-Serna (1993).
SplittingTableau calvo_sanz_serna_4();
const SplittingTableau& tableau_for(Scheme scheme);

// Number of substeps dt/h; ConfigError unless a positive integer.
std::int64_t substep_count(double dt, double h);

PhaseState step_vv(const HamiltonianSystem& system, const PhaseState& u, double h);
PhaseState step_composition(const HamiltonianSystem& system, const PhaseState& u, double h,
                            const CompositionCoefficients& coeffs);

// Applies the one-step scheme dt/h times. Double-double runs convert the
// state on entry and round to nearest double on exit.
PhaseState advance(const HamiltonianSystem& system, const PhaseState& u, double dt, const IntegratorSpec& spec);

// Raw kernel shared by all of the above; p and q are updated in place.
template <class T>
void run_splitting(const HamiltonianSystem& system, const SplittingTableau& tableau, std::vector<T>& p,
                   std::vector<T>& q, T h, std::int64_t steps);

struct OrderFit {
  double slope = 0.0;
  std::vector<double> h_used;
  std::vector<double> errors_used;
  std::vector<double> h_excluded;  // dropped as below the round-off floor
};

// Least-squares slope of log(error at time t_end) against log(h), measured
// against a Kahan-Li double-double reference at h_min/4.
OrderFit empirical_order(const HamiltonianSystem& system, const PhaseState& u0, Scheme scheme,
                         const std::vector<double>& h_list, double t_end, Precision precision);

}  // namespace ppr
