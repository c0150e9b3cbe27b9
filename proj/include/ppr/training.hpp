#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppr/resnet.hpp"
#include "ppr/sampling.hpp"
#include "ppr/system.hpp"

namespace ppr {

enum class LossMetric { mse, ebe };

std::string to_string(LossMetric m);
LossMetric parse_loss_metric(const std::string& text);

// Column-major batch: inputs (2d x B) and S target blocks of the same shape.
struct Batch {
  Eigen::MatrixXd inputs;
  std::vector<Eigen::MatrixXd> targets;

  Eigen::Index size() const { return inputs.cols(); }
};

Batch make_batch(const TrainingSet& data, const std::vector<std::size_t>& indices, int S);
Batch make_batch(const TrainingSet& data, int S);  // whole set

struct LossValue {
  double value = 0.0;
  bool finite = true;
};

// Mean over the batch of (1/S) sum_i diff(u_i, net^i(u0)).
LossValue loss_multistep(const ResNetParams& params, const Batch& batch, int S, LossMetric metric,
                         const HamiltonianSystem& system);

struct LossAndGradient {
  double loss = 0.0;
  bool finite = true;
  Eigen::VectorXd grad;  // same layout as ResNetParams::theta
};

// Reverse-mode gradient of the mean batch loss. The batch is split into
// fixed chunks whose partial sums are reduced in chunk order, so the value
// does not depend on `workers`.
LossAndGradient gradient(const ResNetParams& params, const Batch& batch, int S, LossMetric metric,
                         const HamiltonianSystem& system, unsigned workers = 1);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState adam_init(std::size_t n);
// theta <- theta (1 - lr wd), then the bias-corrected Adam update.
void adam_step(AdamState& state, Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr, double weight_decay);

struct OneCycle {
  double initial = 1e-4;
  double max = 1e-3;
  double final = 1e-6;
  double warmup_fraction = 0.3;
};

// Cosine ramp initial -> max over the warmup, then cosine max -> final.
double one_cycle_lr(long long step, long long total_steps, const OneCycle& schedule);

struct TrainConfig {
  int S = 1;
  LossMetric metric = LossMetric::mse;
  int epochs = 1;
  int batch_size = 64;
  OneCycle lr;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const;
};

struct TrainResult {
  ResNetParams params;
  std::vector<double> history;  // mean minibatch loss per epoch
  double initial_loss = 0.0;    // full-set loss before the first step
  double final_loss = 0.0;      // full-set loss after training
  bool stopped_early = false;
  std::string diagnostics;
};

TrainResult train(const HamiltonianSystem& system, const TrainingSet& data, int L, int n, const TrainConfig& config,
                  bool scaled_skip = true);

}  // namespace ppr
