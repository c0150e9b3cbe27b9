#include "ppr/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "ppr/errors.hpp"
#include "ppr/phase_core.hpp"

namespace ppr {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::vv: return "vv";
    case Scheme::css4: return "css4";
    case Scheme::kl8: return "kl8";
  }
  return "?";
}

std::string to_string(Precision p) { return p == Precision::f64 ? "double" : "dd"; }

Scheme parse_scheme(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "vv") return Scheme::vv;
  if (t == "css4") return Scheme::css4;
  if (t == "kl8") return Scheme::kl8;
  throw ConfigError("unknown integrator scheme '" + text + "'");
}

Precision parse_precision(const std::string& text) {
  if (text == "double" || text == "f64") return Precision::f64;
  if (text == "dd" || text == "double-double") return Precision::dd;
  throw ConfigError("unknown precision '" + text + "'");
}

double parse_step_size(const std::string& text) {
  static const std::regex power(R"(\s*(\d+)\s*\^\s*(-?\d+)\s*)");
  std::smatch m;
  if (std::regex_match(text, m, power)) {
    double base = std::stod(m[1].str());
    int exp = std::stoi(m[2].str());
    double h = std::pow(base, exp);
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("invalid step size '" + text + "'");
    return h;
  }
  try {
    std::size_t used = 0;
    double h = std::stod(text, &used);
    if (used != text.size() || !(h > 0.0)) throw ConfigError("invalid step size '" + text + "'");
    return h;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid step size '" + text + "'");
  }
}

std::string IntegratorSpec::describe() const {
  std::ostringstream os;
  int e = 0;
  double frac = std::frexp(h, &e);
  os << to_string(scheme) << ",h=";
  if (frac == 0.5) {
    os << "2^" << (e - 1);
  } else {
    os.precision(17);
    os << h;
  }
  os << "," << to_string(precision);
  return os.str();
}

void CompositionCoefficients::validate() const {
  if (stages.empty()) throw ConfigError("composition: no stages");
  DD sum(0.0);
  for (const DD& g : stages) sum += g;
  if (std::abs((sum - DD(1.0)).to_double()) > 1e-25) throw ConfigError("composition: stage weights must sum to 1");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (!(stages[i] == stages[stages.size() - 1 - i])) throw ConfigError("composition: stages must be palindromic");
  }
}

const CompositionCoefficients& kahan_li_s17_order8() {
  static const CompositionCoefficients coeffs = [] {
    // Kahan & Li (1997), s17odr8a; nine distinct weights of a palindrome.
    const char* half[] = {
        "0.13020248308889008087881763",  "0.56116298177510838456196441",  "-0.38947496264484728640807860",
        "0.15884190655515560089621075",  "-0.39590389413323757733623154", "0.18453964097831570709183254",
        "0.25837438768632204729397911",  "0.29501172360931029887096624",  "-0.60550853383003451169892108",
    };
    CompositionCoefficients c;
    for (const char* s : half) c.stages.push_back(DD::from_string(s));
    for (int i = 7; i >= 0; --i) c.stages.push_back(c.stages[static_cast<std::size_t>(i)]);
    // Restore exact consistency lost to the 26-digit transcription.
    DD sum(0.0);
    for (const DD& g : c.stages) sum += g;
    c.stages[8] = c.stages[8] + (DD(1.0) - sum);
    c.order = 8;
    c.source = "Kahan-Li 1997 s17odr8";
    return c;
  }();
  return coeffs;
}

const CompositionCoefficients& velocity_verlet_single_stage() {
  static const CompositionCoefficients coeffs{{DD(1.0)}, 2, "velocity Verlet"};
  return coeffs;
}

SplittingTableau composition_tableau(const CompositionCoefficients& coeffs) {
  coeffs.validate();
  SplittingTableau t;
  const auto& g = coeffs.stages;
  t.kick.push_back(g.front() * 0.5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    t.drift.push_back(g[i]);
    DD next = i + 1 < g.size() ? g[i + 1] : DD(0.0);
    t.kick.push_back((g[i] + next) * 0.5);
  }
  t.order = coeffs.order;
  t.name = coeffs.source;
  return t;
}

SplittingTableau calvo_sanz_serna_4() {
  SplittingTableau t;
  t.kick = {DD::from_string("0.061758858135626"), DD::from_string("0.338978026553643"),
            DD::from_string("0.614791307175577"), DD::from_string("-0.140548014659338"),
            DD::from_string("0.125019822794530")};
  t.drift = {DD::from_string("0.205177661542290"), DD::from_string("0.403021281604210"),
             DD::from_string("-0.12092087633891"), DD::from_string("0.512721933192410")};
  t.order = 4;
  t.name = "Calvo-Sanz-Serna 1993 order 4";
  return t;
}

const SplittingTableau& tableau_for(Scheme scheme) {
  static const SplittingTableau vv = composition_tableau(velocity_verlet_single_stage());
  static const SplittingTableau css4 = calvo_sanz_serna_4();
  static const SplittingTableau kl8 = composition_tableau(kahan_li_s17_order8());
  switch (scheme) {
    case Scheme::vv: return vv;
    case Scheme::css4: return css4;
    case Scheme::kl8: return kl8;
  }
  throw ConfigError("unknown scheme");
}

std::int64_t substep_count(double dt, double h) {
  if (!(dt > 0.0) || !(h > 0.0) || !std::isfinite(dt) || !std::isfinite(h)) {
    throw ConfigError("advance: dt and h must be positive");
  }
  double ratio = dt / h;
  double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n) {
    std::ostringstream os;
    os.precision(17);
    os << "advance: dt/h = " << ratio << " is not a positive integer";
    throw ConfigError(os.str());
  }
  return static_cast<std::int64_t>(n);
}

namespace {

template <class T>
T coefficient(const DD& c) {
  if constexpr (std::is_same_v<T, DD>) {
    return c;
  } else {
    return c.to_double();
  }
}

}  // namespace

template <class T>
void run_splitting(const HamiltonianSystem& system, const SplittingTableau& tableau, std::vector<T>& p,
                   std::vector<T>& q, T h, std::int64_t steps) {
  const std::size_t d = system.dim();
  require_same_dim(p.size(), d, "run_splitting");
  require_same_dim(q.size(), d, "run_splitting");
  if (steps <= 0) return;
  const std::size_t stages = tableau.drift.size();

  std::vector<T> kick(stages + 1);
  std::vector<T> drift(stages);
  for (std::size_t i = 0; i <= stages; ++i) kick[i] = coefficient<T>(tableau.kick[i]) * h;
  for (std::size_t i = 0; i < stages; ++i) drift[i] = coefficient<T>(tableau.drift[i]) * h;
  const T merged = coefficient<T>(tableau.kick[stages] + tableau.kick[0]) * h;

  bool unit_mass = true;
  std::vector<T> inv_mass(d);
  for (std::size_t i = 0; i < d; ++i) {
    unit_mass = unit_mass && system.mass_diag()[i] == 1.0;
    inv_mass[i] = T(1.0) / T(system.mass_diag()[i]);
  }

  std::vector<T> grad(d);
  auto apply_kick = [&](const T& c) {
    if (c == T(0.0)) return;
    system.grad_potential(std::span<const T>(q), std::span<T>(grad));
    for (std::size_t i = 0; i < d; ++i) p[i] -= c * grad[i];
  };
  auto apply_drift = [&](const T& c) {
    if (c == T(0.0)) return;
    if (unit_mass) {
      for (std::size_t i = 0; i < d; ++i) q[i] += c * p[i];
    } else {
      for (std::size_t i = 0; i < d; ++i) q[i] += c * (inv_mass[i] * p[i]);
    }
  };

  T pending = kick[0];
  for (std::int64_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < stages; ++i) {
      apply_kick(pending);
      apply_drift(drift[i]);
      pending = kick[i + 1];
    }
    // First-same-as-last: fold this step's closing kick into the next opening one.
    if (step + 1 < steps) pending = merged;
  }
  apply_kick(pending);
}

template void run_splitting<double>(const HamiltonianSystem&, const SplittingTableau&, std::vector<double>&,
                                    std::vector<double>&, double, std::int64_t);
template void run_splitting<DD>(const HamiltonianSystem&, const SplittingTableau&, std::vector<DD>&,
                                std::vector<DD>&, DD, std::int64_t);

namespace {

PhaseState run_double(const HamiltonianSystem& system, const PhaseState& u, const SplittingTableau& tableau,
                      double h, std::int64_t steps) {
  require_same_dim(u.dim(), system.dim(), "advance");
  std::vector<double> p = u.p();
  std::vector<double> q = u.q();
  run_splitting<double>(system, tableau, p, q, h, steps);
  if (!all_finite(p) || !all_finite(q)) throw NumericalError("advance: non-finite state");
  return PhaseState(std::move(p), std::move(q));
}

PhaseState run_dd(const HamiltonianSystem& system, const PhaseState& u, const SplittingTableau& tableau, double h,
                  std::int64_t steps) {
  require_same_dim(u.dim(), system.dim(), "advance");
  std::vector<DD> p(u.p().begin(), u.p().end());
  std::vector<DD> q(u.q().begin(), u.q().end());
  run_splitting<DD>(system, tableau, p, q, DD(h), steps);
  std::vector<double> pd(p.size());
  std::vector<double> qd(q.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    pd[i] = p[i].to_double();
    qd[i] = q[i].to_double();
  }
  if (!all_finite(pd) || !all_finite(qd)) throw NumericalError("advance: non-finite state");
  return PhaseState(std::move(pd), std::move(qd));
}

}  // namespace

PhaseState step_vv(const HamiltonianSystem& system, const PhaseState& u, double h) {
  if (!(h > 0.0)) throw ConfigError("step_vv: h must be positive");
  return run_double(system, u, tableau_for(Scheme::vv), h, 1);
}

PhaseState step_composition(const HamiltonianSystem& system, const PhaseState& u, double h,
                            const CompositionCoefficients& coeffs) {
  if (!(h > 0.0)) throw ConfigError("step_composition: h must be positive");
  return run_double(system, u, composition_tableau(coeffs), h, 1);
}

PhaseState advance(const HamiltonianSystem& system, const PhaseState& u, double dt, const IntegratorSpec& spec) {
  std::int64_t steps = substep_count(dt, spec.h);
  const SplittingTableau& tableau = tableau_for(spec.scheme);
  return spec.precision == Precision::f64 ? run_double(system, u, tableau, spec.h, steps)
                                          : run_dd(system, u, tableau, spec.h, steps);
}

OrderFit empirical_order(const HamiltonianSystem& system, const PhaseState& u0, Scheme scheme,
                         const std::vector<double>& h_list, double t_end, Precision precision) {
  if (h_list.size() < 3) throw ConfigError("empirical_order: need at least 3 step sizes");
  for (std::size_t i = 1; i < h_list.size(); ++i) {
    if (!(h_list[i] < h_list[i - 1])) throw ConfigError("empirical_order: step sizes must decrease");
  }
  const double h_ref = h_list.back() / 4.0;
  const double floor = precision == Precision::dd ? 1e-27 : 1e-12;

  // Reference and errors are kept in double-double so that a dd run is not
  // limited by rounding its final state.
  std::vector<DD> p_ref(u0.p().begin(), u0.p().end());
  std::vector<DD> q_ref(u0.q().begin(), u0.q().end());
  run_splitting<DD>(system, tableau_for(Scheme::kl8), p_ref, q_ref, DD(h_ref), substep_count(t_end, h_ref));

  OrderFit fit;
  for (double h : h_list) {
    std::vector<DD> p, q;
    if (precision == Precision::dd) {
      p.assign(u0.p().begin(), u0.p().end());
      q.assign(u0.q().begin(), u0.q().end());
      run_splitting<DD>(system, tableau_for(scheme), p, q, DD(h), substep_count(t_end, h));
    } else {
      PhaseState u = advance(system, u0, t_end, IntegratorSpec{scheme, h, precision});
      p.assign(u.p().begin(), u.p().end());
      q.assign(u.q().begin(), u.q().end());
    }
    DD s(0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      DD a = p[i] - p_ref[i];
      DD b = q[i] - q_ref[i];
      s += a * a + b * b;
    }
    double err = sqrt(s).to_double();
    if (err > floor && std::isfinite(err)) {
      fit.h_used.push_back(h);
      fit.errors_used.push_back(err);
    } else {
      fit.h_excluded.push_back(h);
    }
  }
  if (fit.h_used.size() < 2) throw NumericalError("empirical_order: fewer than two points above round-off floor");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(fit.h_used.size());
  for (std::size_t i = 0; i < fit.h_used.size(); ++i) {
    mx += std::log(fit.h_used[i]);
    my += std::log(fit.errors_used[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < fit.h_used.size(); ++i) {
    double dx = std::log(fit.h_used[i]) - mx;
    sxy += dx * (std::log(fit.errors_used[i]) - my);
    sxx += dx * dx;
  }
  fit.slope = sxy / sxx;
  return fit;
}

}  // namespace ppr
