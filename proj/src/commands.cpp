#include "ppr/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "ppr/errors.hpp"
#include "ppr/io.hpp"
#include "ppr/phase_core.hpp"

namespace ppr {

namespace {

using Clock = std::chrono::steady_clock;

class PhaseTimer {
 public:
  void start(const std::string& name) {
    name_ = name;
    t0_ = Clock::now();
  }
  void stop() { timings[name_] += std::chrono::duration<double>(Clock::now() - t0_).count(); }
  std::map<std::string, double> timings;

 private:
  std::string name_;
  Clock::time_point t0_;
};

const FpuSystem* as_fpu(const SystemPtr& s) { return dynamic_cast<const FpuSystem*>(s.get()); }

const json* optional_field(const json& j, const char* key) { return j.contains(key) ? &j.at(key) : nullptr; }

json snapshot(const ExperimentConfig& cfg) {
  json s = cfg.doc;
  s["seed"] = cfg.seed();
  s["workers"] = cfg.workers;
  return s;
}

void write_stiff_csv(const std::filesystem::path& path, const FpuSystem& fpu, const std::vector<PhaseState>& states,
                     double dt) {
  std::string s = "n,t";
  for (int j = 1; j <= fpu.m(); ++j) s += ",I" + std::to_string(j);
  s += ",total\n";
  for (std::size_t n = 0; n < states.size(); ++n) {
    s += std::to_string(n) + "," + format_double(static_cast<double>(n) * dt);
    for (double v : stiff_spring_energies(fpu, states[n])) s += "," + format_double(v);
    s.push_back('\n');
  }
  write_text(path, s);
}

std::vector<std::vector<double>> time_columns(std::size_t count, double dt) {
  std::vector<std::vector<double>> lead;
  for (std::size_t n = 0; n < count; ++n) lead.push_back({static_cast<double>(n), static_cast<double>(n) * dt});
  return lead;
}

}  // namespace

void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  PhaseTimer timer;
  const SystemPtr system = system_from_json(cfg.doc);
  const double dt = cfg.doc.value("dt", 1.0);
  const int N = cfg.doc.value("N", 0);
  if (N < 0) throw ConfigError("sim: N must be >= 0");
  const PropagatorPtr solver = solver_from_json(cfg.at("solver"), system, dt, cfg);
  const PhaseState u0 = initial_state_from_json(optional_field(cfg.doc, "u0"), *system);

  timer.start("solve");
  std::vector<PhaseState> traj{u0};
  for (int n = 1; n <= N; ++n) {
    try {
      traj.push_back(solver->propagate(traj.back()));
    } catch (const NumericalError& e) {
      throw NumericalError("sim: step " + std::to_string(n) + ": " + e.what());
    }
  }
  timer.stop();

  std::vector<PhaseState> ref;
  if (cfg.doc.contains("reference")) {
    timer.start("reference");
    const PropagatorPtr r = solver_from_json(cfg.at("reference"), system, dt, cfg);
    ref = sequential_trajectory(*r, u0, N);
    timer.stop();
  }

  timer.start("write");
  write_states_csv(out / "trajectory.csv", traj, {"n", "t"}, time_columns(traj.size(), dt));
  const double h0 = hamiltonian(*system, u0);
  std::string err = "n,t,energy_err,traj_err\n";
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const double e = h0 != 0.0 ? std::abs(hamiltonian(*system, traj[n]) - h0) / std::abs(h0)
                               : std::numeric_limits<double>::quiet_NaN();
    const double t = ref.empty() ? std::numeric_limits<double>::quiet_NaN() : trajectory_error(traj[n], ref[n]);
    err += std::to_string(n) + "," + format_double(static_cast<double>(n) * dt) + "," + format_double(e) + "," +
           format_double(t) + "\n";
  }
  write_text(out / "errors.csv", err);
  if (const auto* fpu = as_fpu(system)) write_stiff_csv(out / "stiff_energies.csv", *fpu, traj, dt);
  timer.stop();
  write_manifest(out, snapshot(cfg), timer.timings);
}

void cmd_parareal(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  PhaseTimer timer;
  const SystemPtr system = system_from_json(cfg.doc);
  const json& pj = cfg.at("parareal");
  const PararealConfig pc = parareal_config_from_json(pj, system, cfg);
  const PhaseState u0 = initial_state_from_json(optional_field(cfg.doc, "u0"), *system);

  timer.start("reference");
  PropagatorPtr ref_solver = pj.contains("reference") ? solver_from_json(pj.at("reference"), system, pc.dt, cfg) : pc.fine;
  const std::vector<PhaseState> reference = sequential_trajectory(*ref_solver, u0, pc.N);
  timer.stop();

  timer.start("parareal");
  const PararealTableau tab = parareal_run(*system, u0, pc, &reference);
  timer.stop();

  timer.start("write");
  write_grid_csv(out / "tableau_traj_err.csv", log10_grid(tab.traj_err),
                 "log10 trajectory error vs sequential reference; rows k, cols n; -16 marks exact zero; nan beyond "
                 "n_trust=" + std::to_string(tab.n_trust));
  write_grid_csv(out / "tableau_energy_err.csv", log10_grid(tab.energy_err),
                 "log10 relative energy error vs H(u0); rows k, cols n; -16 marks exact zero");
  {
    std::vector<PhaseState> flat;
    std::vector<std::vector<double>> lead;
    for (int k = 0; k <= tab.K; ++k) {
      for (int n = 0; n <= tab.N; ++n) {
        flat.push_back(tab.at(k, n));
        lead.push_back({static_cast<double>(k), static_cast<double>(n)});
      }
    }
    write_states_csv(out / "tableau_states.csv", flat, {"k", "n"}, lead);
  }
  if (const auto* fpu = as_fpu(system)) {
    for (int k = 0; k <= tab.K; ++k) {
      write_stiff_csv(out / ("stiff_energies_k" + std::to_string(k) + ".csv"), *fpu,
                      tab.states[static_cast<std::size_t>(k)], pc.dt);
    }
    write_stiff_csv(out / "stiff_energies_reference.csv", *fpu, reference, pc.dt);
  }
  json summary = {{"mode", to_string(pc.mode)}, {"N", pc.N}, {"K", pc.K}, {"n_trust", tab.n_trust}};
  json iters = json::array();
  for (int k = 0; k <= tab.K; ++k) {
    const auto kz = static_cast<std::size_t>(k);
    double emax = 0.0;
    for (double e : tab.energy_err[kz]) emax = std::max(emax, e);
    json it = {{"k", k},
               {"max_energy_err", emax},
               {"fine_seconds", tab.stats[kz].fine_seconds},
               {"coarse_seconds", tab.stats[kz].coarse_seconds},
               {"corrector_seconds", tab.stats[kz].corrector_seconds},
               {"max_pinv_residual", tab.stats[kz].max_pinv_residual},
               {"max_pinv_iterations", tab.stats[kz].max_pinv_iterations}};
    if (k > 0 && !tab.correctors.empty()) {
      const auto& d = tab.correctors[kz - 1].diagnostics;
      it["corrector"] = {{"residual_before", d.residual_before},
                         {"residual_after", d.residual_after},
                         {"min_singular_value", d.min_singular_value},
                         {"full_rank", d.full_rank}};
    }
    iters.push_back(it);
  }
  summary["iterations"] = iters;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  for (std::size_t k = 0; k < tab.correctors.size(); ++k) {
    write_matrix_csv(out / "correctors" / ("omega_k" + std::to_string(k) + ".csv"), tab.correctors[k].omega);
  }
  timer.stop();
  write_manifest(out, snapshot(cfg), timer.timings);
}

void cmd_sample(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  PhaseTimer timer;
  const SystemPtr system = system_from_json(cfg.doc);
  const SamplerConfig sc = sampler_config_from_json(cfg.at("sampler"), system, cfg);

  timer.start("sample");
  const SampleSet set = run_sampler(*system, sc);
  timer.stop();
  timer.start("write");
  save_samples(out / "samples.csv", set, snapshot(cfg));
  timer.stop();

  if (cfg.doc.contains("training")) {
    const json& tj = cfg.at("training");
    const int S = tj.value("S", 1);
    const double dt = tj.value("dt", 0.1);
    if (!tj.contains("fine")) throw ConfigError("training: missing 'fine' solver");
    const PropagatorPtr fine = solver_from_json(tj.at("fine"), system, dt, cfg);
    timer.start("targets");
    const TrainingSet ts = build_training_set(set.states, *fine, S, cfg.workers);
    timer.stop();
    timer.start("write");
    json meta = snapshot(cfg);
    meta["dt"] = dt;
    save_dataset(out / "dataset.csv", ts, meta);
    timer.stop();
  }
  write_manifest(out, snapshot(cfg), timer.timings);
}

void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  PhaseTimer timer;
  const SystemPtr system = system_from_json(cfg.doc);
  timer.start("load");
  const LoadedDataset ds = load_dataset(cfg.resolve(cfg.at("dataset").get<std::string>()));
  timer.stop();
  const json& arch = cfg.at("arch");
  const int L = arch.value("L", 4);
  const int n = arch.value("n", 64);
  const bool scaled = arch.value("scaled_skip", true);
  const TrainConfig tc = train_config_from_json(cfg.at("train"), cfg);

  timer.start("train");
  const TrainResult r = train(*system, ds.data, L, n, tc, scaled);
  timer.stop();
  if (r.stopped_early) throw NumericalError("train: " + r.diagnostics);

  timer.start("write");
  json meta = to_json(tc);
  meta["dt"] = ds.header.at("config").value("dt", 0.0);
  save_checkpoint(out / "checkpoint.ckpt", r.params, meta);
  std::string hist = "epoch,loss\n";
  for (std::size_t e = 0; e < r.history.size(); ++e) hist += std::to_string(e + 1) + "," + format_double(r.history[e]) + "\n";
  write_text(out / "history.csv", hist);
  json summary = {{"initial_loss", r.initial_loss}, {"final_loss", r.final_loss}, {"epochs_run", r.history.size()}};
  write_text(out / "summary.json", summary.dump(2) + "\n");
  timer.stop();
  write_manifest(out, snapshot(cfg), timer.timings);
}

void cmd_eval_nn(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  PhaseTimer timer;
  const SystemPtr system = system_from_json(cfg.doc);
  const LoadedCheckpoint ck = load_checkpoint(cfg.resolve(cfg.at("checkpoint").get<std::string>()));
  const double dt = cfg.doc.value("dt", ck.header.at("train_config").value("dt", 0.0));
  if (!(dt > 0.0)) throw ConfigError("eval-nn: dt must be positive");
  const int steps = cfg.doc.value("steps", 100);
  const PhaseState u0 = initial_state_from_json(optional_field(cfg.doc, "u0"), *system);

  timer.start("rollout");
  const Rollout r = rollout(ck.params, u0, steps);
  timer.stop();
  std::vector<PhaseState> ref;
  if (cfg.doc.contains("reference")) {
    timer.start("reference");
    ref = sequential_trajectory(*solver_from_json(cfg.at("reference"), system, dt, cfg), u0,
                                static_cast<int>(r.states.size()) - 1);
    timer.stop();
  }
  timer.start("write");
  write_states_csv(out / "rollout.csv", r.states, {"n", "t"}, time_columns(r.states.size(), dt));
  const double h0 = hamiltonian(*system, u0);
  std::string err = "n,t,energy_err,traj_err\n";
  for (std::size_t n = 0; n < r.states.size(); ++n) {
    const double e = std::abs(hamiltonian(*system, r.states[n]) - h0) / std::abs(h0);
    const double t = ref.empty() ? std::numeric_limits<double>::quiet_NaN() : trajectory_error(r.states[n], ref[n]);
    err += std::to_string(n) + "," + format_double(static_cast<double>(n) * dt) + "," + format_double(e) + "," +
           format_double(t) + "\n";
  }
  write_text(out / "errors.csv", err);
  json summary = {{"steps", steps}, {"truncated_at", r.truncated_at}};
  write_text(out / "summary.json", summary.dump(2) + "\n");
  timer.stop();
  write_manifest(out, snapshot(cfg), timer.timings);
}

void cmd_bench(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  PhaseTimer timer;
  const SystemPtr system = system_from_json(cfg.doc);
  const double dt = cfg.doc.value("dt", 1.0);
  const int calls = cfg.doc.value("calls", 100);
  if (calls < 1) throw ConfigError("bench: calls must be >= 1");
  const PhaseState u0 = initial_state_from_json(optional_field(cfg.doc, "u0"), *system);
  const PropagatorPtr fine = solver_from_json(cfg.at("fine"), system, dt, cfg);

  timer.start("reference");
  const PhaseState ref = fine->propagate(u0);
  timer.stop();
  const double h0 = hamiltonian(*system, u0);

  std::string csv = "solver,traj_err,energy_err,median_seconds\n";
  timer.start("bench");
  for (const json& sj : cfg.at("solvers")) {
    const PropagatorPtr s = solver_from_json(sj, system, dt, cfg);
    const std::string name = sj.value("name", s->describe());
    const PhaseState u1 = s->propagate(u0);
    std::vector<double> times;
    for (int c = 0; c < calls; ++c) {
      const auto t0 = Clock::now();
      const PhaseState v = s->propagate(u0);
      times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (!(v == u1)) throw NumericalError("bench: solver '" + name + "' is not deterministic");
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    const double median = times[times.size() / 2];
    csv += name + "," + format_double(trajectory_error(u1, ref)) + "," +
           format_double(std::abs(hamiltonian(*system, u1) - h0) / std::abs(h0)) + "," + format_double(median) + "\n";
  }
  timer.stop();
  write_text(out / "bench.csv", csv);
  write_manifest(out, snapshot(cfg), timer.timings);
}

}  // namespace ppr
