#include "ppr/parareal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ppr/parallel.hpp"
#include "ppr/phase_core.hpp"

namespace ppr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// a + (b - c), with a finiteness check tied to the tableau cell.
PhaseState combine(const PhaseState& a, const PhaseState& b, const PhaseState& c, int k, int n) {
  const std::vector<double> va = a.concat(), vb = b.concat(), vc = c.concat();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + (vb[i] - vc[i]);
  if (!all_finite(out)) {
    throw NumericalError("parareal: non-finite state at iteration k=" + std::to_string(k) +
                         ", time index n=" + std::to_string(n));
  }
  return PhaseState::from_concat(out);
}

PhaseState checked_propagate(const Propagator& solver, const PhaseState& u, const char* which, int k, int n) {
  try {
    return solver.propagate(u);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("parareal: ") + which + " solver failed at k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ": " + e.what());
  }
}

}  // namespace

std::string to_string(PararealMode m) { return m == PararealMode::plain ? "plain" : "procrustes"; }

PararealMode parse_parareal_mode(const std::string& text) {
  if (text == "plain") return PararealMode::plain;
  if (text == "procrustes") return PararealMode::procrustes;
  throw ConfigError("unknown parareal mode '" + text + "' (expected plain or procrustes)");
}

void PararealConfig::validate() const {
  if (N < 1) throw ConfigError("parareal: N must be >= 1");
  if (K < 0) throw ConfigError("parareal: K must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("parareal: dt must be positive");
  if (!coarse || !fine) throw ConfigError("parareal: coarse and fine solvers are required");
  auto same = [&](double other) { return std::abs(other - dt) <= 1e-12 * dt; };
  if (!same(coarse->dt()) || !same(fine->dt())) {
    throw ConfigError("parareal: solver interval does not match dt");
  }
  if (n_trust > N) throw ConfigError("parareal: n_trust must be <= N");
}

std::vector<PhaseState> fine_sweep(const std::vector<PhaseState>& states, const Propagator& solver, unsigned workers) {
  std::vector<std::optional<PhaseState>> slots(states.size());
  parallel_for(states.size(), workers, [&](std::size_t i) { slots[i] = solver.propagate(states[i]); });
  std::vector<PhaseState> out;
  out.reserve(states.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<PhaseState> sequential_trajectory(const Propagator& solver, const PhaseState& u0, int steps) {
  if (steps < 0) throw ConfigError("sequential_trajectory: steps must be >= 0");
  std::vector<PhaseState> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  traj.push_back(u0);
  for (int n = 0; n < steps; ++n) traj.push_back(solver.propagate(traj.back()));
  return traj;
}

PararealTableau parareal_run(const HamiltonianSystem& system, const PhaseState& u0, const PararealConfig& config,
                             const std::vector<PhaseState>* reference) {
  config.validate();
  require_same_dim(u0.dim(), system.dim(), "parareal_run");
  if (reference && reference->size() != static_cast<std::size_t>(config.N) + 1) {
    throw DimensionError("parareal_run: reference must have N+1 states");
  }
  if (config.mode == PararealMode::procrustes && !system.has_energy_transform()) {
    throw UnsupportedTransformError("parareal_run: procrustes mode needs an energy transform for " + system.name());
  }

  const int N = config.N, K = config.K;
  const auto Nz = static_cast<std::size_t>(N);
  const Propagator& C = *config.coarse;
  const Propagator& F = *config.fine;

  PararealTableau tab;
  tab.N = N;
  tab.K = K;
  tab.n_trust = config.trusted_horizon();
  tab.states.reserve(static_cast<std::size_t>(K) + 1);

  {
    auto t0 = Clock::now();
    std::vector<PhaseState> row;
    row.reserve(Nz + 1);
    row.push_back(u0);
    for (int n = 0; n < N; ++n) {
      PhaseState next = checked_propagate(C, row.back(), "coarse", 0, n + 1);
      row.push_back(std::move(next));
    }
    tab.states.push_back(std::move(row));
    IterationStats st;
    st.coarse_seconds = seconds_since(t0);
    tab.stats.push_back(st);
  }

  for (int k = 0; k < K; ++k) {
    IterationStats st;
    const auto& prev = tab.states.back();
    std::vector<PhaseState> inputs(prev.begin(), prev.begin() + N);

    auto t0 = Clock::now();
    std::vector<PhaseState> f, g;
    try {
      f = fine_sweep(inputs, F, config.workers);
    } catch (const WorkerError& e) {
      throw NumericalError("parareal: fine solve failed at k=" + std::to_string(k) +
                           ", n=" + std::to_string(e.index()) + ": " + e.what());
    }
    st.fine_seconds = seconds_since(t0);
    t0 = Clock::now();
    try {
      g = fine_sweep(inputs, C, config.workers);
    } catch (const WorkerError& e) {
      throw NumericalError("parareal: coarse solve failed at k=" + std::to_string(k) +
                           ", n=" + std::to_string(e.index()) + ": " + e.what());
    }
    st.coarse_seconds = seconds_since(t0);

    // Corrected copies of g_n, warm-started at g_n. These do not depend on the
    // sweep, so they are computed up front on the worker pool.
    std::vector<PhaseState> g_corr;
    const PhaseCorrector* omega = nullptr;
    if (config.mode == PararealMode::procrustes) {
      t0 = Clock::now();
      tab.correctors.push_back(solve_procrustes(AlignmentData::from_states(system, f, g)));
      omega = &tab.correctors.back();
      std::vector<std::optional<PinvResult>> res(Nz);
      parallel_for(Nz, config.workers, [&](std::size_t n) {
        res[n] = apply_corrector_detailed(*omega, system, g[n], config.corrector);
      });
      g_corr.reserve(Nz);
      for (std::size_t n = 0; n < Nz; ++n) {
        if (!res[n]->converged) {
          throw NumericalError("parareal: corrector pseudo-inverse did not converge at k=" + std::to_string(k) +
                               ", n=" + std::to_string(n) + " (residual " + std::to_string(res[n]->residual) + ")");
        }
        st.max_pinv_residual = std::max(st.max_pinv_residual, res[n]->residual);
        st.max_pinv_iterations = std::max(st.max_pinv_iterations, res[n]->iterations);
        g_corr.push_back(std::move(res[n]->state));
      }
      st.corrector_seconds += seconds_since(t0);
    }

    std::vector<PhaseState> row;
    row.reserve(Nz + 1);
    row.push_back(u0);
    for (int n = 0; n < N; ++n) {
      const auto nz = static_cast<std::size_t>(n);
      auto tc = Clock::now();
      PhaseState c = checked_propagate(C, row.back(), "coarse", k + 1, n + 1);
      st.coarse_seconds += seconds_since(tc);
      if (omega) {
        tc = Clock::now();
        PinvResult r = apply_corrector_detailed(*omega, system, c, config.corrector);
        st.corrector_seconds += seconds_since(tc);
        if (!r.converged) {
          throw NumericalError("parareal: corrector pseudo-inverse did not converge at k=" + std::to_string(k + 1) +
                               ", n=" + std::to_string(n + 1) + " (residual " + std::to_string(r.residual) + ")");
        }
        st.max_pinv_residual = std::max(st.max_pinv_residual, r.residual);
        st.max_pinv_iterations = std::max(st.max_pinv_iterations, r.iterations);
        row.push_back(combine(r.state, f[nz], g_corr[nz], k + 1, n + 1));
      } else {
        row.push_back(combine(c, f[nz], g[nz], k + 1, n + 1));
      }
    }
    tab.states.push_back(std::move(row));
    tab.stats.push_back(st);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  tab.traj_err.assign(static_cast<std::size_t>(K) + 1, std::vector<double>(Nz + 1, nan));
  tab.energy_err.assign(static_cast<std::size_t>(K) + 1, std::vector<double>(Nz + 1, nan));
  if (reference) {
    const double h_ref = hamiltonian(system, (*reference)[0]);
    for (int k = 0; k <= K; ++k) {
      for (int n = 0; n <= N; ++n) {
        const auto kz = static_cast<std::size_t>(k), nz = static_cast<std::size_t>(n);
        const PhaseState& u = tab.states[kz][nz];
        if (n <= tab.n_trust) tab.traj_err[kz][nz] = trajectory_error(u, (*reference)[nz]);
        if (h_ref != 0.0) tab.energy_err[kz][nz] = std::abs(hamiltonian(system, u) - h_ref) / std::abs(h_ref);
      }
    }
  }
  return tab;
}

}  // namespace ppr
