#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "ppr/commands.hpp"
#include "ppr/config.hpp"
#include "ppr/energy_pinv.hpp"
#include "ppr/errors.hpp"
#include "ppr/integrators.hpp"
#include "ppr/io.hpp"
#include "ppr/parareal.hpp"
#include "ppr/phase_core.hpp"
#include "ppr/procrustes.hpp"
#include "ppr/resnet.hpp"
#include "ppr/sampling.hpp"
#include "ppr/training.hpp"

namespace py = pybind11;
using namespace ppr;

namespace {

double step_from(const py::object& h) {
  if (py::isinstance<py::str>(h)) return parse_step_size(h.cast<std::string>());
  return h.cast<double>();
}

// {"scheme": "css4", "h": "2^-8" or 0.0039, "precision": "f64"}
IntegratorSpec spec_from(const py::dict& d) {
  IntegratorSpec s;
  s.scheme = parse_scheme(d["scheme"].cast<std::string>());
  s.h = step_from(d["h"]);
  s.precision = d.contains("precision") ? parse_precision(d["precision"].cast<std::string>()) : Precision::f64;
  return s;
}

PinvMode pinv_mode(const std::string& m) {
  if (m == "energy_shell") return PinvMode::energy_shell;
  if (m == "least_squares") return PinvMode::least_squares;
  throw ConfigError("pinv mode must be energy_shell or least_squares");
}

std::vector<std::vector<double>> as_rows(const std::vector<PhaseState>& states) {
  std::vector<std::vector<double>> rows;
  rows.reserve(states.size());
  for (const auto& s : states) rows.push_back(s.concat());
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ppr core bindings";
  m.attr("__version__") = "0.1.0";

  static py::exception<Error> base(m, "PprError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<UnsupportedTransformError>(m, "UnsupportedTransformError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<PhaseState>(m, "PhaseState")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("p"), py::arg("q"))
      .def_static("from_concat", [](const std::vector<double>& u) { return PhaseState::from_concat(u); })
      .def_property_readonly("p", &PhaseState::p)
      .def_property_readonly("q", &PhaseState::q)
      .def_property_readonly("dim", &PhaseState::dim)
      .def("concat", &PhaseState::concat)
      .def(py::self == py::self)
      .def("__repr__", [](const PhaseState& s) { return "PhaseState(dim=" + std::to_string(s.dim()) + ")"; });

  py::class_<HamiltonianSystem, std::shared_ptr<HamiltonianSystem>>(m, "HamiltonianSystem")
      .def_property_readonly("dim", &HamiltonianSystem::dim)
      .def_property_readonly("name", &HamiltonianSystem::name)
      .def_property_readonly("has_energy_transform", &HamiltonianSystem::has_energy_transform)
      .def("potential", [](const HamiltonianSystem& s, const std::vector<double>& q) { return s.potential(q); });
  py::class_<FpuSystem, HamiltonianSystem, std::shared_ptr<FpuSystem>>(m, "FpuSystem")
      .def(py::init<int, double>(), py::arg("m"), py::arg("omega"))
      .def_property_readonly("m", &FpuSystem::m)
      .def_property_readonly("omega", &FpuSystem::omega);
  py::class_<HarmonicOscillator, HamiltonianSystem, std::shared_ptr<HarmonicOscillator>>(m, "HarmonicOscillator")
      .def(py::init<>());
  py::class_<KeplerSystem, HamiltonianSystem, std::shared_ptr<KeplerSystem>>(m, "KeplerSystem").def(py::init<>());

  m.def("hamiltonian", [](const HamiltonianSystem& s, const PhaseState& u) { return hamiltonian(s, u); });
  m.def("energy_transform", [](const HamiltonianSystem& s, const PhaseState& u) { return energy_transform(s, u).v; });
  m.def(
      "energy_transform_pinv",
      [](const HamiltonianSystem& s, const std::vector<double>& target, const PhaseState& warm, double tol,
         int max_iter, const std::string& mode) {
        PinvResult r = solve_energy_pinv(s, EnergyVector{target}, warm, {tol, max_iter, pinv_mode(mode)});
        if (!r.converged) throw PinvConvergenceError(r);
        return r.state;
      },
      py::arg("system"), py::arg("target"), py::arg("warm_start"), py::arg("tol") = 1e-12, py::arg("max_iter") = 50,
      py::arg("mode") = "least_squares");
  m.def("trajectory_error", &trajectory_error);
  m.def("energy_error", &energy_error, py::arg("system"), py::arg("u"), py::arg("u_ref"));
  m.def("stiff_spring_energies", &stiff_spring_energies);
  m.def("fpu_initial_state", &fpu_initial_state);

  m.def(
      "advance",
      [](const HamiltonianSystem& s, const PhaseState& u, double dt, const py::dict& spec) {
        return advance(s, u, dt, spec_from(spec));
      },
      py::arg("system"), py::arg("u"), py::arg("dt"), py::arg("spec"));
  m.def(
      "empirical_order",
      [](const HamiltonianSystem& s, const PhaseState& u0, const std::string& scheme, const std::vector<double>& h,
         double t_end, const std::string& precision) {
        return empirical_order(s, u0, parse_scheme(scheme), h, t_end, parse_precision(precision)).slope;
      },
      py::arg("system"), py::arg("u0"), py::arg("scheme"), py::arg("h_list"), py::arg("t_end") = 1.0,
      py::arg("precision") = "f64");

  m.def(
      "solve_procrustes",
      [](const Eigen::MatrixXd& fine, const Eigen::MatrixXd& coarse) {
        PhaseCorrector c = solve_procrustes({fine, coarse});
        py::dict d;
        d["omega"] = c.omega;
        d["full_rank"] = c.diagnostics.full_rank;
        d["residual_before"] = c.diagnostics.residual_before;
        d["residual_after"] = c.diagnostics.residual_after;
        return d;
      },
      py::arg("fine"), py::arg("coarse"));
  m.def(
      "apply_corrector",
      [](const Eigen::MatrixXd& omega, const HamiltonianSystem& s, const PhaseState& u, double tol, int max_iter,
         const std::string& mode) { return apply_corrector({omega, {}}, s, u, tol, max_iter, pinv_mode(mode)); },
      py::arg("omega"), py::arg("system"), py::arg("u"), py::arg("tol") = 1e-12, py::arg("max_iter") = 50,
      py::arg("mode") = "energy_shell");

  m.def(
      "parareal",
      [](std::shared_ptr<HamiltonianSystem> s, const PhaseState& u0, int N, int K, double dt, const py::dict& coarse,
         const py::dict& fine, const std::string& mode, unsigned workers, int n_trust) {
        PararealConfig c;
        c.N = N;
        c.K = K;
        c.dt = dt;
        c.coarse = make_integrator(s, spec_from(coarse), dt);
        c.fine = make_integrator(s, spec_from(fine), dt);
        c.mode = parse_parareal_mode(mode);
        c.workers = workers;
        c.n_trust = n_trust;
        const auto ref = sequential_trajectory(*c.fine, u0, N);
        PararealTableau t;
        {
          py::gil_scoped_release release;
          t = parareal_run(*s, u0, c, &ref);
        }
        py::list states;
        for (const auto& row : t.states) states.append(as_rows(row));
        py::dict d;
        d["states"] = states;
        d["traj_err"] = t.traj_err;
        d["energy_err"] = t.energy_err;
        d["n_trust"] = t.n_trust;
        d["reference"] = as_rows(ref);
        return d;
      },
      py::arg("system"), py::arg("u0"), py::arg("N"), py::arg("K"), py::arg("dt"), py::arg("coarse"),
      py::arg("fine"), py::arg("mode") = "plain", py::arg("workers") = 1, py::arg("n_trust") = -1);

  m.def(
      "sample_h0",
      [](std::shared_ptr<HamiltonianSystem> s, const std::string& algo, double H0, const std::vector<double>& q0,
         double sigma, double delta_t, const py::dict& flow, int groups, int steps, int n_traj, std::uint64_t seed,
         unsigned workers) {
        SamplerConfig c;
        c.algo = parse_sampler_algo(algo);
        c.H0 = H0;
        c.q0 = q0;
        c.sigma = sigma;
        c.delta_t = delta_t;
        c.flow = make_integrator(s, spec_from(flow), delta_t);
        c.n_chains = c.n_levelsets = groups;
        c.n_trans = c.L = steps;
        c.n_traj = n_traj;
        c.seed = seed;
        c.workers = workers;
        py::gil_scoped_release release;
        return run_sampler(*s, c).states;
      },
      py::arg("system"), py::arg("algo"), py::arg("H0"), py::arg("q0"), py::arg("sigma"), py::arg("delta_t"),
      py::arg("flow"), py::arg("groups"), py::arg("steps"), py::arg("n_traj") = 1, py::arg("seed") = 0,
      py::arg("workers") = 1, "groups = chains (hmc) or level sets; steps = transitions or trajectory length");
  m.def("truncated_normal_mean", &truncated_normal_mean, py::arg("mu"), py::arg("sigma"), py::arg("lower") = 0.0);
  m.def("min_distance", &min_distance_diagnostic, py::arg("reference"), py::arg("samples"));

  py::class_<ResNetParams>(m, "ResNet")
      .def(py::init<int, int, int, bool>(), py::arg("L"), py::arg("n"), py::arg("d"), py::arg("scaled_skip") = true)
      .def_static("he_init", &ResNetParams::he_init, py::arg("L"), py::arg("n"), py::arg("d"), py::arg("seed"),
                  py::arg("scaled_skip") = true)
      .def_property_readonly("L", &ResNetParams::L)
      .def_property_readonly("width", &ResNetParams::width)
      .def_property_readonly("d", &ResNetParams::d)
      .def_property(
          "theta", [](const ResNetParams& p) { return p.theta; },
          [](ResNetParams& p, const Eigen::VectorXd& t) {
            if (t.size() != p.theta.size()) throw DimensionError("theta has the wrong length");
            p.theta = t;
          })
      .def("forward", [](const ResNetParams& p, const PhaseState& u) { return forward(p, u); })
      .def("rollout", [](const ResNetParams& p, const PhaseState& u0, int steps) { return rollout(p, u0, steps).states; });

  m.def(
      "train",
      [](const HamiltonianSystem& s, const std::vector<PhaseState>& inputs,
         const std::vector<std::vector<PhaseState>>& targets, int L, int n, int S, const std::string& metric,
         int epochs, int batch_size, std::vector<double> lr, double weight_decay, std::uint64_t seed,
         unsigned workers) {
        if (lr.size() != 3) throw ConfigError("lr must be (initial, max, final)");
        TrainingSet data;
        data.inputs = inputs;
        data.targets = targets;
        data.S = targets.empty() ? 0 : static_cast<int>(targets.front().size());
        TrainConfig c;
        c.S = S;
        c.metric = parse_loss_metric(metric);
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.lr = {lr[0], lr[1], lr[2], 0.3};
        c.weight_decay = weight_decay;
        c.seed = seed;
        c.workers = workers;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(s, data, L, n, c);
        }
        py::dict d;
        d["params"] = r.params;
        d["history"] = r.history;
        d["initial_loss"] = r.initial_loss;
        d["final_loss"] = r.final_loss;
        d["stopped_early"] = r.stopped_early;
        return d;
      },
      py::arg("system"), py::arg("inputs"), py::arg("targets"), py::arg("L"), py::arg("n"), py::arg("S") = 1,
      py::arg("metric") = "mse", py::arg("epochs") = 1, py::arg("batch_size") = 64,
      py::arg("lr") = std::vector<double>{1e-4, 1e-3, 1e-6}, py::arg("weight_decay") = 0.0, py::arg("seed") = 0,
      py::arg("workers") = 1);
  m.def(
      "training_targets",
      [](const std::shared_ptr<HamiltonianSystem>& s, const std::vector<PhaseState>& inputs, double dt,
         const py::dict& fine, int S) {
        auto prop = make_integrator(s, spec_from(fine), dt);
        return build_training_set(inputs, *prop, S).targets;
      },
      py::arg("system"), py::arg("inputs"), py::arg("dt"), py::arg("fine"), py::arg("S"));

  m.def("serialize_checkpoint", [](const ResNetParams& p) { return serialize_checkpoint(p, json::object()); });
  m.def("parse_checkpoint", [](const std::string& text) { return parse_checkpoint(text).params; });
  m.def("sha256_hex", [](const std::string& bytes) { return sha256_hex(bytes); });

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_json, const std::string& out, py::object seed,
         unsigned workers, const std::string& base_dir) {
        ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(config_json), base_dir);
        if (!seed.is_none()) cfg.seed_override = seed.cast<std::uint64_t>();
        cfg.workers = workers;
        py::gil_scoped_release release;
        if (command == "sim") cmd_simulate(cfg, out);
        else if (command == "parareal") cmd_parareal(cfg, out);
        else if (command == "sample") cmd_sample(cfg, out);
        else if (command == "train") cmd_train(cfg, out);
        else if (command == "eval-nn") cmd_eval_nn(cfg, out);
        else if (command == "bench") cmd_bench(cfg, out);
        else throw ConfigError("unknown command '" + command + "'");
      },
      py::arg("command"), py::arg("config_json"), py::arg("out"), py::arg("seed") = py::none(),
      py::arg("workers") = 1, py::arg("base_dir") = ".", "Same as the ppr command-line subcommands.");
}
