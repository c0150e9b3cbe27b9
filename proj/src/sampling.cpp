#include "ppr/sampling.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "ppr/parallel.hpp"
#include "ppr/phase_core.hpp"

namespace ppr {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(t)), static_cast<std::uint32_t>(splitmix64(t) >> 32),
                    static_cast<std::uint32_t>(splitmix64(t)), static_cast<std::uint32_t>(splitmix64(t) >> 32)};
  return std::mt19937_64(seq);
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Inverse Mills ratio phi(a) / (1 - Phi(a)).
double mills(double alpha) {
  const double tail = 0.5 * std::erfc(alpha / std::numbers::sqrt2);
  if (tail > 1e-300) return std_normal_pdf(alpha) / tail;
  return alpha + 1.0 / alpha;  // asymptotic, alpha >> 1
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(seeded_engine(seed, stream)) {}

double Rng::normal() { return normal_(engine_); }
double Rng::uniform() { return uniform_(engine_); }

double truncated_normal_mean(double mu, double sigma, double lower) {
  const double alpha = (lower - mu) / sigma;
  return mu + sigma * mills(alpha);
}

double truncated_normal_variance(double mu, double sigma, double lower) {
  const double alpha = (lower - mu) / sigma;
  const double lam = mills(alpha);
  return sigma * sigma * (1.0 + alpha * lam - lam * lam);
}

double sample_kinetic_energy(double mean, double sigma, Rng& rng, int max_rejects) {
  for (int attempt = 0; attempt < max_rejects; ++attempt) {
    const double k = mean + sigma * rng.normal();
    if (k > 0.0) return k;
  }
  throw ShellUnreachableError("energy shell unreachable: " + std::to_string(max_rejects) +
                              " consecutive non-positive kinetic energy draws (mean " + std::to_string(mean) + ")");
}

std::vector<double> sample_unit_sphere(std::size_t d, Rng& rng) {
  if (d == 0) throw DimensionError("sample_unit_sphere: dimension must be >= 1");
  std::vector<double> x(d);
  for (;;) {
    double norm2 = 0.0;
    for (auto& v : x) {
      v = rng.normal();
      norm2 += v * v;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : x) v *= inv;
      return x;
    }
  }
}

std::vector<double> sample_momentum_on_shell(const HamiltonianSystem& system, std::span<const double> q, double H0,
                                             double sigma, Rng& rng, int max_rejects) {
  require_same_dim(q.size(), system.dim(), "sample_momentum_on_shell");
  if (!(sigma > 0.0)) throw ConfigError("sample_momentum_on_shell: sigma must be positive");
  const double kinetic = sample_kinetic_energy(H0 - system.potential(q), sigma, rng, max_rejects);
  std::vector<double> p = sample_unit_sphere(q.size(), rng);
  const double scale = std::sqrt(2.0 * kinetic);
  const auto& m = system.mass_diag();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] *= scale * std::sqrt(m[i]);
  return p;
}

std::string to_string(SamplerAlgo a) { return a == SamplerAlgo::hmc ? "hmc" : "trajensemble"; }

SamplerAlgo parse_sampler_algo(const std::string& text) {
  if (text == "hmc" || text == "hmc-h0") return SamplerAlgo::hmc;
  if (text == "trajensemble" || text == "traj_ensemble" || text == "trajensemble-h0") return SamplerAlgo::traj_ensemble;
  throw ConfigError("unknown sampler '" + text + "' (expected hmc or trajensemble)");
}

void SamplerConfig::validate(const HamiltonianSystem& system) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sampler: sigma must be positive");
  if (!(delta_t > 0.0)) throw ConfigError("sampler: delta_t must be positive");
  if (!std::isfinite(H0)) throw ConfigError("sampler: H0 must be finite");
  if (q0.size() != system.dim()) throw ConfigError("sampler: q0 has the wrong dimension");
  if (!all_finite(q0)) throw ConfigError("sampler: q0 must be finite");
  if (!flow) throw ConfigError("sampler: flow solver is required");
  if (std::abs(flow->dt() - delta_t) > 1e-12 * delta_t) throw ConfigError("sampler: flow interval does not match delta_t");
  if (max_rejects < 1) throw ConfigError("sampler: max_rejects must be >= 1");
  if (algo == SamplerAlgo::hmc) {
    if (n_chains < 1 || n_trans < 1) throw ConfigError("sampler: n_chains and n_trans must be >= 1");
  } else if (n_levelsets < 1 || n_traj < 1 || L < 1) {
    throw ConfigError("sampler: n_levelsets, n_traj and L must be >= 1");
  }
}

namespace {

SampleSet empty_set(const SamplerConfig& c) {
  SampleSet s;
  s.algo = to_string(c.algo);
  s.flow = c.flow->describe();
  s.H0 = c.H0;
  s.sigma = c.sigma;
  s.seed = c.seed;
  return s;
}

struct Group {
  std::vector<PhaseState> states;
  std::vector<SampleOrigin> origin;
};

SampleSet flatten(SampleSet out, std::vector<Group>& groups) {
  for (auto& g : groups) {
    for (std::size_t i = 0; i < g.states.size(); ++i) {
      out.states.push_back(std::move(g.states[i]));
      out.origin.push_back(g.origin[i]);
    }
  }
  return out;
}

}  // namespace

SampleSet hmc_h0(const HamiltonianSystem& system, const SamplerConfig& config) {
  SamplerConfig c = config;
  c.algo = SamplerAlgo::hmc;
  c.validate(system);
  std::vector<Group> chains(static_cast<std::size_t>(c.n_chains));
  parallel_for(chains.size(), c.workers, [&](std::size_t i) {
    Rng rng(c.seed, i);
    Group& g = chains[i];
    std::vector<double> q = c.q0;
    for (int j = 1; j <= c.n_trans; ++j) {
      std::vector<double> p;
      try {
        p = sample_momentum_on_shell(system, q, c.H0, c.sigma, rng, c.max_rejects);
      } catch (const ShellUnreachableError& e) {
        throw ShellUnreachableError("chain " + std::to_string(i) + ", step " + std::to_string(j) + ": " + e.what());
      }
      PhaseState next = c.flow->propagate(PhaseState(std::move(p), q));
      q = next.q();
      g.states.push_back(std::move(next));
      g.origin.push_back({static_cast<int>(i), 0, j});
    }
  });
  return flatten(empty_set(c), chains);
}

SampleSet traj_ensemble_h0(const HamiltonianSystem& system, const SamplerConfig& config) {
  SamplerConfig c = config;
  c.algo = SamplerAlgo::traj_ensemble;
  c.validate(system);
  const double mean = c.H0 - system.potential(c.q0);
  const auto& m = system.mass_diag();
  std::vector<Group> levels(static_cast<std::size_t>(c.n_levelsets));
  parallel_for(levels.size(), c.workers, [&](std::size_t i) {
    Rng rng(c.seed, i);
    Group& g = levels[i];
    double kinetic = 0.0;
    try {
      kinetic = sample_kinetic_energy(mean, c.sigma, rng, c.max_rejects);
    } catch (const ShellUnreachableError& e) {
      throw ShellUnreachableError("level set " + std::to_string(i) + ": " + e.what());
    }
    const double scale = std::sqrt(2.0 * kinetic);
    for (int j = 0; j < c.n_traj; ++j) {
      std::vector<double> p = sample_unit_sphere(c.q0.size(), rng);
      for (std::size_t a = 0; a < p.size(); ++a) p[a] *= scale * std::sqrt(m[a]);
      PhaseState u(std::move(p), c.q0);
      for (int k = 1; k <= c.L; ++k) {
        u = c.flow->propagate(u);
        g.states.push_back(u);
        g.origin.push_back({static_cast<int>(i), j, k});
      }
    }
  });
  return flatten(empty_set(c), levels);
}

SampleSet run_sampler(const HamiltonianSystem& system, const SamplerConfig& config) {
  return config.algo == SamplerAlgo::hmc ? hmc_h0(system, config) : traj_ensemble_h0(system, config);
}

TrainingSet build_training_set(const std::vector<PhaseState>& inputs, const Propagator& fine, int S, unsigned workers) {
  if (S < 1) throw ConfigError("build_training_set: S must be >= 1");
  std::vector<std::optional<std::vector<PhaseState>>> seqs(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t n) {
    std::vector<PhaseState> seq;
    seq.reserve(static_cast<std::size_t>(S));
    const PhaseState* prev = &inputs[n];
    try {
      for (int i = 0; i < S; ++i) {
        seq.push_back(fine.propagate(*prev));
        prev = &seq.back();
      }
    } catch (const NumericalError&) {
      return;  // non-finite continuation; dropped below
    }
    seqs[n] = std::move(seq);
  });
  TrainingSet ts;
  ts.S = S;
  ts.fine = fine.describe();
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    if (!seqs[n]) {
      ++ts.dropped;
      continue;
    }
    ts.inputs.push_back(inputs[n]);
    ts.targets.push_back(std::move(*seqs[n]));
  }
  return ts;
}

std::vector<double> min_distance_diagnostic(const std::vector<PhaseState>& reference,
                                            const std::vector<PhaseState>& samples) {
  if (samples.empty()) throw DimensionError("min_distance_diagnostic: empty sample set");
  const std::size_t d2 = samples.front().dim() * 2;
  std::vector<double> flat;
  flat.reserve(samples.size() * d2);
  for (const auto& s : samples) {
    require_same_dim(s.dim() * 2, d2, "min_distance_diagnostic");
    auto c = s.concat();
    flat.insert(flat.end(), c.begin(), c.end());
  }
  std::vector<double> out;
  out.reserve(reference.size());
  for (const auto& r : reference) {
    require_same_dim(r.dim() * 2, d2, "min_distance_diagnostic");
    const auto x = r.concat();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double* y = flat.data() + s * d2;
      double acc = 0.0;
      for (std::size_t a = 0; a < d2 && acc < best; ++a) {
        const double diff = x[a] - y[a];
        acc += diff * diff;
      }
      best = std::min(best, acc);
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

}  // namespace ppr
