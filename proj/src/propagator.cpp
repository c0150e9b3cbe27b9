#include "ppr/propagator.hpp"

#include <thread>

#include "ppr/errors.hpp"
#include "ppr/parallel.hpp"

namespace ppr {

unsigned default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

IntegratorPropagator::IntegratorPropagator(SystemPtr system, IntegratorSpec spec, double dt)
    : system_(std::move(system)), spec_(spec), dt_(dt) {
  if (!system_) throw ConfigError("IntegratorPropagator: null system");
  substep_count(dt_, spec_.h);  // validates dt/h up front
}

PhaseState IntegratorPropagator::propagate(const PhaseState& u) const { return advance(*system_, u, dt_, spec_); }

std::string IntegratorPropagator::describe() const { return spec_.describe(); }

PropagatorPtr make_integrator(SystemPtr system, IntegratorSpec spec, double dt) {
  return std::make_shared<IntegratorPropagator>(std::move(system), spec, dt);
}

}  // namespace ppr
