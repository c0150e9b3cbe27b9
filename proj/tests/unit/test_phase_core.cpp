#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ppr/energy_pinv.hpp"
#include "ppr/phase_core.hpp"
#include "ppr/procrustes.hpp"
#include "ppr/errors.hpp"
#include "test_util.hpp"

using namespace ppr;

TEST_CASE("PhaseState validates its invariants") {
  CHECK_THROWS_AS(PhaseState({1.0}, {1.0, 2.0}), DimensionError);
  CHECK_THROWS_AS(PhaseState({}, {}), DimensionError);
  CHECK_THROWS_AS(PhaseState({std::nan("")}, {0.0}), NumericalError);
  CHECK_THROWS_AS(PhaseState({INFINITY}, {0.0}), NumericalError);
  PhaseState u({1, 2}, {3, 4});
  CHECK(u.concat() == std::vector<double>{1, 2, 3, 4});
  CHECK(PhaseState::from_concat(u.concat()) == u);
  CHECK_THROWS_AS(PhaseState::from_concat(std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("hamiltonian of the standard FPU start") {
  for (double w : {50.0, 300.0}) {
    FpuSystem fpu(3, w);
    const double expected = 2.0 + 3.0 / (w * w) + 0.5 / (w * w * w * w);
    const double h = hamiltonian(fpu, fpu_initial_state(fpu));
    CHECK(std::abs(h - expected) <= 1e-14 * expected);
  }
}

TEST_CASE("hamiltonian hand evaluations") {
  FpuSystem fpu(3, 300.0);
  CHECK(hamiltonian(fpu, PhaseState::zeros(6)) == 0.0);
  FpuSystem small(1, 2.0);
  // stiff term vanishes; soft springs (1-0)^4 + (0-1)^4
  CHECK(hamiltonian(small, PhaseState({0, 0}, {1, 1})) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(hamiltonian(fpu, PhaseState::zeros(4)), DimensionError);
}

TEST_CASE("vector field and finite-difference gradient") {
  FpuSystem fpu(1, 1.0);
  VectorField f = hamiltonian_vector_field(fpu, PhaseState({1, 2}, {0, 0}));
  CHECK(f.dq == std::vector<double>{1, 2});
  CHECK(f.dp == std::vector<double>{0, 0});

  std::mt19937_64 rng(7);
  FpuSystem big(3, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    PhaseState u = testutil::random_state(rng, 6);
    VectorField v = hamiltonian_vector_field(big, u);
    for (std::size_t i = 0; i < 6; ++i) {
      auto qp = u.q(), qm = u.q();
      const double h = 1e-6;
      qp[i] += h;
      qm[i] -= h;
      const double fd = -(big.potential(qp) - big.potential(qm)) / (2 * h);
      CHECK(std::abs(v.dp[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("energy transform identity and closed forms") {
  HarmonicOscillator ho;
  EnergyVector e = energy_transform(ho, PhaseState({0.3}, {-1.2}));
  CHECK(e.v[0] == doctest::Approx(0.3 / std::numbers::sqrt2).epsilon(1e-15));
  CHECK(e.v[1] == doctest::Approx(-1.2 / std::numbers::sqrt2).epsilon(1e-15));

  FpuSystem fpu(3, 300.0);
  EnergyVector z = energy_transform(fpu, PhaseState::zeros(6));
  CHECK(z.v.size() == 13u);
  for (double x : z.v) CHECK(x == 0.0);

  const double w = 300.0;
  const double expected = 2.0 + 3.0 / (w * w) + 0.5 / (w * w * w * w);
  CHECK(std::abs(energy_transform(fpu, fpu_initial_state(fpu)).squared_norm() - expected) <= 1e-12 * expected);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    PhaseState u = testutil::random_state(rng, 6, 2.0);
    const double h = hamiltonian(fpu, u);
    CHECK(std::abs(energy_transform(fpu, u).squared_norm() - h) <= 1e-12 * std::max(1.0, std::abs(h)));
  }

  KeplerSystem kepler;
  CHECK_THROWS_AS(energy_transform(kepler, PhaseState({0, 1}, {1, 0})), UnsupportedTransformError);
}

TEST_CASE("energy transform Jacobian and VJP match finite differences") {
  FpuSystem fpu(2, 7.0);
  std::mt19937_64 rng(3);
  PhaseState u = testutil::random_state(rng, 4);
  Eigen::MatrixXd jac;
  fpu.lambda_q_jacobian(u.q(), jac);
  const std::size_t k = fpu.lambda_q_dim();
  for (std::size_t j = 0; j < 4; ++j) {
    auto qp = u.q(), qm = u.q();
    qp[j] += 1e-6;
    qm[j] -= 1e-6;
    std::vector<double> lp(k), lm(k);
    fpu.lambda_q(qp, lp);
    fpu.lambda_q(qm, lm);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            doctest::Approx((lp[i] - lm[i]) / 2e-6).epsilon(1e-7));
    }
  }
  std::vector<double> cot = testutil::uniform_vec(rng, k, -1, 1), out(4);
  fpu.lambda_q_vjp(u.q(), cot, out);
  Eigen::VectorXd ref = jac.transpose() * Eigen::Map<Eigen::VectorXd>(cot.data(), static_cast<Eigen::Index>(k));
  for (int j = 0; j < 4; ++j) CHECK(out[static_cast<std::size_t>(j)] == doctest::Approx(ref(j)).epsilon(1e-13));
}

TEST_CASE("pseudo-inverse round trip and warm starts") {
  FpuSystem fpu(3, 50.0);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    PhaseState u = testutil::random_state(rng, 6, 3.0);
    PhaseState back = energy_transform_pinv(fpu, energy_transform(fpu, u), u);
    CHECK(trajectory_error(back, u) <= 1e-8);
  }
  for (int trial = 0; trial < 20; ++trial) {
    PhaseState u = testutil::random_state(rng, 6);
    auto dq = testutil::uniform_vec(rng, 6, -1, 1);
    double n = 0;
    for (double x : dq) n += x * x;
    std::vector<double> q = u.q();
    for (std::size_t i = 0; i < 6; ++i) q[i] += 1e-3 * dq[i] / std::sqrt(n);
    PinvResult r = solve_energy_pinv(fpu, energy_transform(fpu, u), PhaseState(u.p(), q));
    CHECK(r.converged);
    CHECK(r.residual <= 1e-8);
    CHECK(r.residual <= r.initial_residual);
  }
}

TEST_CASE("pseudo-inverse picks the preimage nearest the warm start") {
  // m = 1 with zero stiff component: q = +(a, a) and q = -(a, a) share the image.
  FpuSystem fpu(1, 10.0);
  const double a = 0.6;
  EnergyVector target = energy_transform(fpu, PhaseState({0.1, -0.2}, {a, a}));
  PhaseState plus = energy_transform_pinv(fpu, target, PhaseState({0, 0}, {0.5, 0.55}));
  PhaseState minus = energy_transform_pinv(fpu, target, PhaseState({0, 0}, {-0.5, -0.58}));
  CHECK(plus.q()[0] == doctest::Approx(a).epsilon(1e-10));
  CHECK(plus.q()[1] == doctest::Approx(a).epsilon(1e-10));
  CHECK(minus.q()[0] == doctest::Approx(-a).epsilon(1e-10));
  CHECK(minus.q()[1] == doctest::Approx(-a).epsilon(1e-10));
  CHECK(plus.p()[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(plus.p()[1] == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("pseudo-inverse reports non-convergence with the best iterate") {
  FpuSystem fpu(3, 50.0);
  std::mt19937_64 rng(9);
  PhaseState u = testutil::random_state(rng, 6);
  PhaseState far = testutil::random_state(rng, 6, 2.0);
  PinvOptions opt{1e-14, 1, PinvMode::least_squares};
  PinvResult r = solve_energy_pinv(fpu, energy_transform(fpu, u), far, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.residual <= r.initial_residual);
  try {
    energy_transform_pinv(fpu, energy_transform(fpu, u), far, 1e-14, 1);
    FAIL("expected PinvConvergenceError");
  } catch (const PinvConvergenceError& e) {
    CHECK(e.best().residual == r.residual);
  }
  CHECK_THROWS_AS(solve_energy_pinv(fpu, EnergyVector{std::vector<double>(5, 0.0)}, u), DimensionError);
}

TEST_CASE("energy-shell pseudo-inverse lands exactly on the target energy") {
  FpuSystem fpu(3, 300.0);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    PhaseState u = testutil::random_state(rng, 6, 0.5);
    Eigen::MatrixXd om = testutil::small_rotation(rng, 13, 1e-2);
    EnergyVector lam = energy_transform(fpu, u);
    Eigen::VectorXd t = om * Eigen::Map<Eigen::VectorXd>(lam.v.data(), 13);
    EnergyVector target{std::vector<double>(t.data(), t.data() + 13)};
    PinvResult r = solve_energy_pinv(fpu, target, u, {1e-12, 50, PinvMode::energy_shell});
    CHECK(r.converged);
    const double h = hamiltonian(fpu, u);
    CHECK(std::abs(hamiltonian(fpu, r.state) - h) <= 1e-12 * h);
  }
}

TEST_CASE("trajectory and energy errors") {
  PhaseState a({3, 4, 0}, {1, 1, 1});
  PhaseState b({0, 0, 0}, {1, 1, 1});
  CHECK(trajectory_error(a, a) == 0.0);
  CHECK(trajectory_error(a, b) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(trajectory_error(a, PhaseState::zeros(2)), DimensionError);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    PhaseState x = testutil::random_state(rng, 4), y = testutil::random_state(rng, 4), z = testutil::random_state(rng, 4);
    auto cx = x.concat(), cy = y.concat();
    double s = 0;
    for (std::size_t i = 0; i < cx.size(); ++i) s += (cx[i] - cy[i]) * (cx[i] - cy[i]);
    CHECK(trajectory_error(x, y) == doctest::Approx(std::sqrt(s)).epsilon(1e-14));
    CHECK(trajectory_error(x, y) == trajectory_error(y, x));
    CHECK(trajectory_error(x, z) <= trajectory_error(x, y) + trajectory_error(y, z) + 1e-15);
  }

  HarmonicOscillator ho;
  // H = (p^2 + q^2)/2
  PhaseState ref({2.0}, {0.0}), u({0.0}, {std::sqrt(4.4)});
  CHECK(energy_error(ho, ref, ref) == 0.0);
  CHECK(energy_error(ho, u, ref) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK_THROWS_AS(energy_error(ho, u, PhaseState({0.0}, {0.0})), NumericalError);

  // Replacing u by an equal-energy state from the corrector leaves the error unchanged.
  FpuSystem fpu(3, 300.0);
  PhaseState u0 = fpu_initial_state(fpu);
  PhaseState v = testutil::random_state(rng, 6, 0.5);
  PhaseCorrector c{testutil::small_rotation(rng, 13, 1e-2), {}};
  PhaseState w = apply_corrector(c, fpu, v);
  // H(v) is O(10^3) while H(u0) is about 2, so compare at the precision of H(v)
  const double scale = hamiltonian(fpu, v) / hamiltonian(fpu, u0);
  CHECK(std::abs(energy_error(fpu, w, u0) - energy_error(fpu, v, u0)) <= 1e-13 * scale);
}

TEST_CASE("stiff spring energies") {
  FpuSystem fpu(3, 300.0);
  for (double e : stiff_spring_energies(fpu, PhaseState::zeros(6))) CHECK(e == 0.0);
  // y_1 = 1/w and ydot_1 = 1 at the standard start, so I_1 = (1 + 1)/2.
  auto I = stiff_spring_energies(fpu, fpu_initial_state(fpu));
  REQUIRE(I.size() == 4u);
  CHECK(I[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(I[1] == 0.0);
  CHECK(I[2] == 0.0);
  CHECK(I[3] == doctest::Approx(1.0).epsilon(1e-14));
}
