#include <doctest.h>

#include <cmath>

#include "ppr/double_double.hpp"
#include "ppr/integrators.hpp"
#include "ppr/phase_core.hpp"
#include "ppr/errors.hpp"
#include "test_util.hpp"

using namespace ppr;

TEST_CASE("double-double arithmetic") {
  const DD tenth = DD::from_string("0.1");
  const DD one = tenth * 10.0;
  CHECK(std::abs((one - DD(1.0)).hi()) <= 1e-31);
  const DD third = DD(1.0) / DD(3.0);
  CHECK(std::abs((third * 3.0 - DD(1.0)).hi()) <= 1e-31);
  const DD r2 = sqrt(DD(2.0));
  CHECK(std::abs((r2 * r2 - DD(2.0)).hi()) <= 1e-30);
  // 1 + 2^-80 is representable only through the low word
  const DD tiny = DD(1.0) + std::ldexp(1.0, -80);
  CHECK(tiny.hi() == 1.0);
  CHECK(tiny.lo() == std::ldexp(1.0, -80));
  CHECK((tiny - DD(1.0)).hi() == std::ldexp(1.0, -80));
}

TEST_CASE("step size parsing") {
  CHECK(parse_step_size("2^-9") == 1.0 / 512.0);
  CHECK(parse_step_size("2^-18") == std::ldexp(1.0, -18));
  CHECK(parse_step_size("5^-6") == doctest::Approx(6.4e-5).epsilon(1e-15));
  CHECK(parse_step_size("0.125") == 0.125);
  CHECK_THROWS_AS(parse_step_size("two"), ConfigError);
  CHECK(parse_scheme("kl8") == Scheme::kl8);
  CHECK(parse_precision("dd") == Precision::dd);
  CHECK_THROWS_AS(parse_scheme("rk4"), ConfigError);
}

TEST_CASE("substep counts must be positive integers") {
  CHECK(substep_count(1.0, 1.0 / 512.0) == 512);
  CHECK(substep_count(0.4, parse_step_size("5^-6")) == 6250);
  CHECK_THROWS_AS(substep_count(1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(substep_count(0.0, 0.1), ConfigError);
  CHECK_THROWS_AS(substep_count(1.0, -0.1), ConfigError);
}

TEST_CASE("velocity Verlet on the harmonic oscillator") {
  HarmonicOscillator ho;
  const double h = 1e-3;
  PhaseState u = step_vv(ho, PhaseState({0.0}, {1.0}), h);
  // exact flow: q = cos t, p = -sin t
  CHECK(std::abs(u.q()[0] - std::cos(h)) <= 1e-8);
  CHECK(std::abs(u.p()[0] + std::sin(h)) <= 1e-8);

  // ||VV_h(u) - VV_{h/2}^2(u)|| = O(h^3)
  std::vector<double> logs_h, logs_e;
  PhaseState u0({0.3}, {1.0});
  for (double hh : {0.1, 0.05, 0.025, 0.0125}) {
    PhaseState one = step_vv(ho, u0, hh);
    PhaseState two = step_vv(ho, step_vv(ho, u0, hh / 2), hh / 2);
    logs_h.push_back(std::log(hh));
    logs_e.push_back(std::log(trajectory_error(one, two)));
  }
  const double slope = (logs_e.back() - logs_e.front()) / (logs_h.back() - logs_h.front());
  CHECK(slope >= 2.7);
}

TEST_CASE("zero force drifts exactly") {
  FreeParticle free({2.0, 0.5});
  PhaseState u({1.0, -3.0}, {0.25, 0.5});
  PhaseState v = step_vv(free, u, 0.5);
  CHECK(v.p() == u.p());
  CHECK(v.q()[0] == 0.25 + 0.5 * 1.0 / 2.0);
  CHECK(v.q()[1] == 0.5 + 0.5 * -3.0 / 0.5);
}

TEST_CASE("composition coefficients") {
  const auto& kl = kahan_li_s17_order8();
  CHECK(kl.stages.size() == 17u);
  CHECK(kl.order == 8);
  CHECK_NOTHROW(kl.validate());
  DD sum(0.0);
  for (const DD& g : kl.stages) sum += g;
  CHECK(std::abs((sum - DD(1.0)).hi()) <= 1e-25);
  for (std::size_t i = 0; i < kl.stages.size(); ++i) CHECK(kl.stages[i] == kl.stages[kl.stages.size() - 1 - i]);

  CompositionCoefficients bad{{DD(0.5), DD(0.4)}, 2, "broken"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const auto& css = calvo_sanz_serna_4();
  DD kick(0.0), drift(0.0);
  for (const DD& b : css.kick) kick += b;
  for (const DD& a : css.drift) drift += a;
  CHECK(std::abs(kick.to_double() - 1.0) <= 1e-12);
  CHECK(std::abs(drift.to_double() - 1.0) <= 1e-12);
}

TEST_CASE("single-stage composition is velocity Verlet") {
  FpuSystem fpu(3, 50.0);
  std::mt19937_64 rng(1);
  PhaseState u = testutil::random_state(rng, 6);
  PhaseState a = step_vv(fpu, u, 1e-3);
  PhaseState b = step_composition(fpu, u, 1e-3, velocity_verlet_single_stage());
  CHECK(testutil::max_abs_diff(a, b) <= 1e-15);
}

TEST_CASE("advance is one step at dt = h and deterministic") {
  FpuSystem fpu(3, 50.0);
  PhaseState u = fpu_initial_state(fpu);
  const double h = 1.0 / 256.0;
  CHECK(advance(fpu, u, h, {Scheme::vv, h, Precision::f64}) == step_vv(fpu, u, h));
  for (Scheme s : {Scheme::vv, Scheme::css4, Scheme::kl8}) {
    for (Precision p : {Precision::f64, Precision::dd}) {
      IntegratorSpec spec{s, h, p};
      CHECK(advance(fpu, u, 0.25, spec) == advance(fpu, u, 0.25, spec));
    }
  }
  CHECK_THROWS_AS(advance(fpu, u, 0.3, {Scheme::vv, h, Precision::f64}), ConfigError);
}

TEST_CASE("symmetric schemes are time reversible") {
  FpuSystem fpu(3, 50.0);
  PhaseState u = fpu_initial_state(fpu);
  auto flip = [](const PhaseState& s) {
    auto p = s.p();
    for (auto& x : p) x = -x;
    return PhaseState(p, s.q());
  };
  for (Scheme s : {Scheme::vv, Scheme::kl8}) {
    IntegratorSpec spec{s, 1.0 / 1024.0, Precision::f64};
    PhaseState back = flip(advance(fpu, flip(advance(fpu, u, 1.0, spec)), 1.0, spec));
    CHECK(trajectory_error(back, u) <= 1e-10);
  }
}

TEST_CASE("empirical orders of VV and CSS4") {
  FpuSystem fpu(3, 50.0);
  PhaseState u0 = fpu_initial_state(fpu);
  OrderFit vv = empirical_order(fpu, u0, Scheme::vv, {1.0 / 512, 1.0 / 1024, 1.0 / 2048, 1.0 / 4096}, 1.0,
                                Precision::f64);
  CHECK(vv.slope >= 1.7);
  CHECK(vv.slope <= 2.3);
  OrderFit css = empirical_order(fpu, u0, Scheme::css4, {1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024}, 1.0,
                                 Precision::f64);
  CHECK(css.slope >= 3.7);
  CHECK(css.slope <= 4.3);
  CHECK_THROWS_AS(empirical_order(fpu, u0, Scheme::vv, {0.1, 0.05}, 1.0, Precision::f64), ConfigError);
  CHECK_THROWS_AS(empirical_order(fpu, u0, Scheme::vv, {0.05, 0.1, 0.025}, 1.0, Precision::f64), ConfigError);
}

TEST_CASE("double-double loses digits later than double") {
  FpuSystem fpu(3, 50.0);
  PhaseState u0 = fpu_initial_state(fpu);
  const double h = std::ldexp(1.0, -12);
  const double T = 50.0;
  PhaseState ref = advance(fpu, u0, T, {Scheme::kl8, h / 2, Precision::dd});
  PhaseState f64 = advance(fpu, u0, T, {Scheme::kl8, h, Precision::f64});
  PhaseState dd = advance(fpu, u0, T, {Scheme::kl8, h, Precision::dd});
  CHECK(trajectory_error(dd, ref) <= trajectory_error(f64, ref));
}
