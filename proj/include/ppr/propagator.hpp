#pragma once

#include <memory>
#include <string>

#include "ppr/integrators.hpp"
#include "ppr/phase_state.hpp"
#include "ppr/system.hpp"

namespace ppr {

// A solution map advancing a state by a fixed interval dt. Implementations
// are immutable and safe to call concurrently.
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual PhaseState propagate(const PhaseState& u) const = 0;
  virtual double dt() const = 0;
  virtual std::string describe() const = 0;
};

using PropagatorPtr = std::shared_ptr<const Propagator>;

class IntegratorPropagator final : public Propagator {
 public:
  IntegratorPropagator(SystemPtr system, IntegratorSpec spec, double dt);

  PhaseState propagate(const PhaseState& u) const override;
  double dt() const override { return dt_; }
  std::string describe() const override;
  const IntegratorSpec& spec() const { return spec_; }

 private:
  SystemPtr system_;
  IntegratorSpec spec_;
  double dt_;
};

PropagatorPtr make_integrator(SystemPtr system, IntegratorSpec spec, double dt);

}  // namespace ppr
