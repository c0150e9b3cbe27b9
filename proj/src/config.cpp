#include "ppr/config.hpp"

#include <cmath>

#include "ppr/errors.hpp"
#include "ppr/io.hpp"
#include "ppr/phase_core.hpp"
#include "ppr/resnet.hpp"

namespace ppr {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

template <class T>
T get_req(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("config: missing field '") + key + "'");
  return get_or<T>(j, key, T{});
}

double step_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_step_size(v.get<std::string>());
  throw ConfigError("config: step size must be a number or a string like \"2^-9\"");
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(std::move(doc), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

ExperimentConfig ExperimentConfig::from_json(json doc, std::filesystem::path base_dir) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  c.doc = std::move(doc);
  c.base_dir = std::move(base_dir);
  c.workers = get_or<unsigned>(c.doc, "workers", 1u);
  return c;
}

std::uint64_t ExperimentConfig::seed() const {
  if (seed_override) return *seed_override;
  return get_or<std::uint64_t>(doc, "seed", 0);
}

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

const json& ExperimentConfig::at(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("config: missing section '" + key + "'");
  return doc.at(key);
}

SystemPtr system_from_json(const json& j) {
  const json& s = j.contains("system") && j.at("system").is_object() ? j.at("system") : j;
  const std::string name = get_req<std::string>(s, "system");
  if (name == "fpu") {
    const int m = get_req<int>(s, "m");
    const double omega = get_req<double>(s, "omega");
    if (m < 1) throw ConfigError("fpu: m must be >= 1");
    if (!(omega > 0.0)) throw ConfigError("fpu: omega must be positive");
    return std::make_shared<FpuSystem>(m, omega);
  }
  if (name == "harmonic") return std::make_shared<HarmonicOscillator>();
  if (name == "kepler") return std::make_shared<KeplerSystem>();
  throw ConfigError("unknown system '" + name + "'");
}

IntegratorSpec integrator_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("integrator spec must be an object");
  IntegratorSpec s;
  s.scheme = parse_scheme(get_req<std::string>(j, "scheme"));
  if (!j.contains("h")) throw ConfigError("integrator spec: missing 'h'");
  s.h = step_from_json(j.at("h"));
  if (!(s.h > 0.0)) throw ConfigError("integrator spec: h must be positive");
  s.precision = parse_precision(get_or<std::string>(j, "precision", "f64"));
  return s;
}

json to_json(const IntegratorSpec& spec) {
  return {{"scheme", to_string(spec.scheme)}, {"h", format_double(spec.h)}, {"precision", to_string(spec.precision)}};
}

PropagatorPtr solver_from_json(const json& j, const SystemPtr& system, double dt, const ExperimentConfig& cfg) {
  if (j.is_object() && j.contains("checkpoint")) {
    auto ck = load_checkpoint(cfg.resolve(j.at("checkpoint").get<std::string>()));
    if (static_cast<std::size_t>(ck.params.d()) != system->dim()) {
      throw ConfigError("checkpoint dimension does not match the system");
    }
    return std::make_shared<NnPropagator>(std::move(ck.params), dt);
  }
  return make_integrator(system, integrator_spec_from_json(j), dt);
}

PhaseState initial_state_from_json(const json* j, const HamiltonianSystem& system) {
  if (!j || (j->is_string() && j->get<std::string>() == "fpu_standard")) {
    const auto* fpu = dynamic_cast<const FpuSystem*>(&system);
    if (!fpu) throw ConfigError("u0: the standard start is only defined for the fpu system");
    return fpu_initial_state(*fpu);
  }
  if (!j->is_object()) throw ConfigError("u0 must be \"fpu_standard\" or {p, q}");
  PhaseState u(get_req<std::vector<double>>(*j, "p"), get_req<std::vector<double>>(*j, "q"));
  require_same_dim(u.dim(), system.dim(), "u0");
  return u;
}

PinvOptions pinv_options_from_json(const json* j) {
  PinvOptions o;
  o.mode = PinvMode::energy_shell;
  if (!j) return o;
  o.tol = get_or<double>(*j, "tol", o.tol);
  o.max_iter = get_or<int>(*j, "max_iter", o.max_iter);
  const std::string mode = get_or<std::string>(*j, "mode", "energy_shell");
  if (mode == "energy_shell") {
    o.mode = PinvMode::energy_shell;
  } else if (mode == "least_squares") {
    o.mode = PinvMode::least_squares;
  } else {
    throw ConfigError("pinv mode must be energy_shell or least_squares");
  }
  if (!(o.tol > 0.0) || o.max_iter < 1) throw ConfigError("pinv: tol > 0 and max_iter >= 1 required");
  return o;
}

PararealConfig parareal_config_from_json(const json& j, const SystemPtr& system, const ExperimentConfig& cfg) {
  PararealConfig c;
  c.N = get_req<int>(j, "N");
  c.K = get_req<int>(j, "K");
  c.dt = get_req<double>(j, "dt");
  c.mode = parse_parareal_mode(get_or<std::string>(j, "mode", "plain"));
  c.n_trust = get_or<int>(j, "n_trust", -1);
  c.workers = cfg.workers;
  if (!(c.dt > 0.0)) throw ConfigError("parareal: dt must be positive");
  if (!j.contains("coarse") || !j.contains("fine")) throw ConfigError("parareal: coarse and fine solvers required");
  c.coarse = solver_from_json(j.at("coarse"), system, c.dt, cfg);
  c.fine = solver_from_json(j.at("fine"), system, c.dt, cfg);
  c.corrector.pinv = pinv_options_from_json(j.contains("pinv") ? &j.at("pinv") : nullptr);
  c.validate();
  return c;
}

SamplerConfig sampler_config_from_json(const json& j, const SystemPtr& system, const ExperimentConfig& cfg) {
  SamplerConfig c;
  c.algo = parse_sampler_algo(get_or<std::string>(j, "algo", "hmc"));
  const PhaseState u_init = initial_state_from_json(j.contains("u_init") ? &j.at("u_init") : nullptr, *system);
  if (j.contains("H0") && j.at("H0").is_number()) {
    c.H0 = j.at("H0").get<double>();
  } else {
    c.H0 = hamiltonian(*system, u_init);
  }
  c.q0 = j.contains("q0") ? j.at("q0").get<std::vector<double>>() : u_init.q();
  c.sigma = get_or<double>(j, "sigma", 0.1);
  c.n_chains = get_or<int>(j, "n_chains", 1);
  c.n_trans = get_or<int>(j, "n_trans", 1);
  c.n_levelsets = get_or<int>(j, "n_levelsets", 1);
  c.n_traj = get_or<int>(j, "n_traj", 1);
  c.L = get_or<int>(j, "L", 1);
  c.delta_t = get_req<double>(j, "delta_t");
  c.max_rejects = get_or<int>(j, "max_rejects", 10000);
  c.seed = cfg.seed();
  c.workers = cfg.workers;
  if (!j.contains("flow")) throw ConfigError("sampler: missing 'flow' solver");
  if (!(c.delta_t > 0.0)) throw ConfigError("sampler: delta_t must be positive");
  c.flow = solver_from_json(j.at("flow"), system, c.delta_t, cfg);
  c.validate(*system);
  return c;
}

TrainConfig train_config_from_json(const json& j, const ExperimentConfig& cfg) {
  TrainConfig c;
  c.S = get_or<int>(j, "S", 1);
  c.metric = parse_loss_metric(get_or<std::string>(j, "metric", "mse"));
  c.epochs = get_or<int>(j, "epochs", 1);
  c.batch_size = get_or<int>(j, "batch_size", 64);
  if (j.contains("lr")) {
    const json& lr = j.at("lr");
    c.lr.initial = get_or<double>(lr, "initial", c.lr.initial);
    c.lr.max = get_or<double>(lr, "max", c.lr.max);
    c.lr.final = get_or<double>(lr, "final", c.lr.final);
    c.lr.warmup_fraction = get_or<double>(lr, "warmup_fraction", c.lr.warmup_fraction);
  }
  c.weight_decay = get_or<double>(j, "weight_decay", 0.0);
  c.seed = cfg.seed();
  c.workers = cfg.workers;
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"S", c.S},
          {"metric", to_string(c.metric)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr",
           {{"initial", c.lr.initial},
            {"max", c.lr.max},
            {"final", c.lr.final},
            {"warmup_fraction", c.lr.warmup_fraction}}},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed}};
}

}  // namespace ppr
