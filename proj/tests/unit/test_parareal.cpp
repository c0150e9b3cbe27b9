#include <doctest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "ppr/parallel.hpp"
#include "ppr/parareal.hpp"
#include "ppr/phase_core.hpp"
#include "ppr/errors.hpp"
#include "test_util.hpp"

using namespace ppr;

namespace {

SystemPtr fpu50() { return std::make_shared<FpuSystem>(3, 50.0); }

PararealConfig config(const SystemPtr& sys, IntegratorSpec coarse, IntegratorSpec fine, int N, int K,
                      PararealMode mode = PararealMode::plain, unsigned workers = 1) {
  PararealConfig c;
  c.N = N;
  c.K = K;
  c.dt = 0.5;
  c.coarse = make_integrator(sys, coarse, c.dt);
  c.fine = make_integrator(sys, fine, c.dt);
  c.mode = mode;
  c.workers = workers;
  return c;
}

const IntegratorSpec kCoarse{Scheme::vv, 1.0 / 32, Precision::f64};
const IntegratorSpec kFine{Scheme::css4, 1.0 / 512, Precision::f64};

// Scales the state by a huge factor; overflows within a couple of calls.
class Exploding final : public Propagator {
 public:
  PhaseState propagate(const PhaseState& u) const override {
    auto c = u.concat();
    for (auto& x : c) x = x * 1e200 + 1.0;
    if (!all_finite(c)) throw NumericalError("overflow");
    return PhaseState::from_concat(c);
  }
  double dt() const override { return 0.5; }
  std::string describe() const override { return "exploding"; }
};

class FailsOnLarge final : public Propagator {
 public:
  PhaseState propagate(const PhaseState& u) const override {
    if (u.q()[0] > 0.5) throw NumericalError("refused");
    return u;
  }
  double dt() const override { return 1.0; }
  std::string describe() const override { return "fails"; }
};

}  // namespace

TEST_CASE("K = 0 gives the coarse sequential trajectory") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  PararealConfig c = config(sys, kCoarse, kFine, 6, 0);
  PararealTableau t = parareal_run(*sys, u0, c);
  REQUIRE(t.states.size() == 1u);
  CHECK(t.states[0] == sequential_trajectory(*c.coarse, u0, 6));
}

TEST_CASE("coarse equal to fine converges in one iteration") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  PararealConfig c = config(sys, kFine, kFine, 8, 1);
  PararealTableau t = parareal_run(*sys, u0, c);
  auto fine = sequential_trajectory(*c.fine, u0, 8);
  for (int n = 0; n <= 8; ++n) CHECK(trajectory_error(t.at(1, n), fine[static_cast<std::size_t>(n)]) <= 1e-12);
}

TEST_CASE("exactness: first k points of row k match the fine solution") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  // plain parareal with the VV coarse solver diverges at later n for this
  // stiffness, so use a coarse CSS4 that keeps every row finite
  PararealConfig c = config(sys, {Scheme::css4, 1.0 / 64, Precision::f64}, kFine, 10, 5);
  auto fine = sequential_trajectory(*c.fine, u0, 10);
  PararealTableau t = parareal_run(*sys, u0, c, &fine);
  for (int k = 0; k <= 5; ++k) {
    CHECK(t.at(k, 0) == u0);
    for (int n = 0; n <= k; ++n) CHECK(trajectory_error(t.at(k, n), fine[static_cast<std::size_t>(n)]) <= 1e-10);
  }
  // metrics: trajectory errors only up to n_trust = N/2, energy errors everywhere
  CHECK(t.n_trust == 5);
  CHECK(std::isnan(t.traj_err[2][6]));
  CHECK(!std::isnan(t.traj_err[2][5]));
  for (double e : t.energy_err[3]) CHECK(std::isfinite(e));
}

TEST_CASE("fine trajectory is a fixed point in both modes") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  for (PararealMode mode : {PararealMode::plain, PararealMode::procrustes}) {
    PararealConfig c = config(sys, kCoarse, kFine, 4, 6, mode);
    auto fine = sequential_trajectory(*c.fine, u0, 4);
    PararealTableau t = parareal_run(*sys, u0, c);
    for (int k = 4; k <= 6; ++k)
      for (int n = 0; n <= 4; ++n) CHECK(trajectory_error(t.at(k, n), fine[static_cast<std::size_t>(n)]) <= 1e-9);
    if (mode == PararealMode::procrustes) CHECK(t.correctors.size() == 6u);
  }
}

TEST_CASE("tableau is identical across worker counts") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  PararealTableau a = parareal_run(*sys, u0, config(sys, kCoarse, kFine, 8, 3, PararealMode::procrustes, 1));
  PararealTableau b = parareal_run(*sys, u0, config(sys, kCoarse, kFine, 8, 3, PararealMode::procrustes, 4));
  CHECK(a.states == b.states);
  for (std::size_t k = 0; k < a.correctors.size(); ++k) CHECK(a.correctors[k].omega == b.correctors[k].omega);
}

TEST_CASE("configuration errors") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  PararealConfig c = config(sys, kCoarse, kFine, 4, 1);
  c.N = 0;
  CHECK_THROWS_AS(parareal_run(*sys, u0, c), ConfigError);
  c = config(sys, kCoarse, kFine, 4, 1);
  c.K = -1;
  CHECK_THROWS_AS(parareal_run(*sys, u0, c), ConfigError);
  c = config(sys, kCoarse, kFine, 4, 1);
  c.dt = 0.25;
  CHECK_THROWS_AS(parareal_run(*sys, u0, c), ConfigError);
  c = config(sys, kCoarse, kFine, 4, 1);
  std::vector<PhaseState> short_ref(3, u0);
  CHECK_THROWS_AS(parareal_run(*sys, u0, c, &short_ref), DimensionError);
  CHECK_THROWS_AS(parse_parareal_mode("theta"), ConfigError);

  auto kepler = std::make_shared<KeplerSystem>();
  PararealConfig kc = config(kepler, kCoarse, kFine, 2, 1, PararealMode::procrustes);
  CHECK_THROWS_AS(parareal_run(*kepler, PhaseState({0, 1}, {1, 0}), kc), UnsupportedTransformError);
}

TEST_CASE("non-finite states abort with cell coordinates") {
  auto sys = fpu50();
  PhaseState u0 = fpu_initial_state(static_cast<const FpuSystem&>(*sys));
  PararealConfig c = config(sys, kCoarse, kFine, 4, 2);
  c.coarse = std::make_shared<Exploding>();
  try {
    parareal_run(*sys, u0, c);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("k=0") != std::string::npos);
    CHECK(msg.find("n=2") != std::string::npos);
  }
}

TEST_CASE("fine sweep") {
  auto sys = fpu50();
  auto prop = make_integrator(sys, kFine, 0.5);
  CHECK(fine_sweep({}, *prop, 4).empty());
  std::mt19937_64 rng(3);
  std::vector<PhaseState> states;
  for (int i = 0; i < 16; ++i) states.push_back(testutil::random_state(rng, 6, 0.5));
  CHECK(fine_sweep(states, *prop, 1) == fine_sweep(states, *prop, 8));

  FailsOnLarge fails;
  std::vector<PhaseState> mixed{PhaseState({0}, {0.1}), PhaseState({0}, {0.2}), PhaseState({0}, {0.9}),
                                PhaseState({0}, {0.7})};
  try {
    fine_sweep(mixed, fails, 3);
    FAIL("expected WorkerError");
  } catch (const WorkerError& e) {
    CHECK(e.index() == 2u);
  }
}

TEST_CASE("fine sweep throughput (soft, needs 8 hardware threads)") {
  if (std::thread::hardware_concurrency() < 8) {
    MESSAGE("skipped: only " << std::thread::hardware_concurrency() << " hardware threads");
    return;
  }
  auto sys = fpu50();
  auto prop = make_integrator(sys, {Scheme::vv, 1e-5, Precision::f64}, 1.0);
  std::vector<PhaseState> states(64, fpu_initial_state(static_cast<const FpuSystem&>(*sys)));
  auto time = [&](unsigned w) {
    auto t0 = std::chrono::steady_clock::now();
    fine_sweep(states, *prop, w);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double t1 = time(1), t8 = time(8);
  MESSAGE("speedup with 8 workers: " << t1 / t8);
  WARN(t1 / t8 >= 4.0);
}
