#include "ppr/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include "ppr/errors.hpp"
#include "ppr/parallel.hpp"

namespace ppr {

std::string to_string(LossMetric m) { return m == LossMetric::mse ? "mse" : "ebe"; }

LossMetric parse_loss_metric(const std::string& text) {
  if (text == "mse" || text == "MSE") return LossMetric::mse;
  if (text == "ebe" || text == "EBE") return LossMetric::ebe;
  throw ConfigError("unknown loss metric '" + text + "' (expected mse or ebe)");
}

Batch make_batch(const TrainingSet& data, const std::vector<std::size_t>& indices, int S) {
  if (S < 1 || S > data.S) throw ConfigError("make_batch: S must be in [1, dataset S]");
  const auto rows = static_cast<Eigen::Index>(2 * data.dim());
  const auto cols = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.inputs.resize(rows, cols);
  b.targets.assign(static_cast<std::size_t>(S), Eigen::MatrixXd(rows, cols));
  for (Eigen::Index c = 0; c < cols; ++c) {
    const std::size_t n = indices[static_cast<std::size_t>(c)];
    auto put = [&](Eigen::MatrixXd& m, const PhaseState& u) {
      const auto v = u.concat();
      m.col(c) = Eigen::Map<const Eigen::VectorXd>(v.data(), rows);
    };
    put(b.inputs, data.inputs[n]);
    for (int i = 0; i < S; ++i) put(b.targets[static_cast<std::size_t>(i)], data.targets[n][static_cast<std::size_t>(i)]);
  }
  return b;
}

Batch make_batch(const TrainingSet& data, int S) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(data, all, S);
}

namespace {

constexpr Eigen::Index kChunk = 64;

struct StepCache {
  Eigen::MatrixXd x;
  std::vector<Eigen::MatrixXd> z;  // pre-activations, hidden layers 0..L-1
  std::vector<Eigen::MatrixXd> y;  // hidden outputs 0..L-1
};

Eigen::MatrixXd forward_cached(const ResNetParams& P, const Eigen::MatrixXd& x, StepCache& c) {
  const int L = P.L();
  c.x = x;
  c.z.resize(static_cast<std::size_t>(L));
  c.y.resize(static_cast<std::size_t>(L));
  c.z[0] = (P.W(0) * x).colwise() + P.b(0);
  c.y[0] = c.z[0].unaryExpr(&elu);
  for (int l = 1; l < L; ++l) {
    const auto lz = static_cast<std::size_t>(l);
    c.z[lz] = (P.W(l) * c.y[lz - 1]).colwise() + P.b(l);
    c.y[lz] = c.y[lz - 1] + P.skip_scale() * c.z[lz].unaryExpr(&elu);
  }
  return (P.W(L) * c.y[static_cast<std::size_t>(L - 1)]).colwise() + P.b(L);
}

// Accumulates parameter gradients into g and returns d(loss)/d(input).
Eigen::MatrixXd backward(const ResNetParams& P, const StepCache& c, const Eigen::MatrixXd& d_out, ResNetParams& g) {
  const int L = P.L();
  const auto last = static_cast<std::size_t>(L - 1);
  g.W(L).noalias() += d_out * c.y[last].transpose();
  g.b(L) += d_out.rowwise().sum();
  Eigen::MatrixXd dy = P.W(L).transpose() * d_out;
  for (int l = L - 1; l >= 1; --l) {
    const auto lz = static_cast<std::size_t>(l);
    Eigen::MatrixXd dz = P.skip_scale() * dy.cwiseProduct(c.z[lz].unaryExpr(&elu_derivative));
    g.W(l).noalias() += dz * c.y[lz - 1].transpose();
    g.b(l) += dz.rowwise().sum();
    dy.noalias() += P.W(l).transpose() * dz;
  }
  Eigen::MatrixXd dz = dy.cwiseProduct(c.z[0].unaryExpr(&elu_derivative));
  g.W(0).noalias() += dz * c.x.transpose();
  g.b(0) += dz.rowwise().sum();
  return P.W(0).transpose() * dz;
}

class Metric {
 public:
  Metric(LossMetric kind, const HamiltonianSystem& system, int d) : kind_(kind), system_(system), d_(d) {
    if (kind_ == LossMetric::ebe) {
      if (!system.has_energy_transform()) {
        throw UnsupportedTransformError("EBE loss needs an energy transform for " + system.name());
      }
      inv_sqrt2m_.resize(d);
      for (int i = 0; i < d; ++i) inv_sqrt2m_(i) = 1.0 / std::sqrt(2.0 * system.mass_diag()[static_cast<std::size_t>(i)]);
      nq_ = static_cast<Eigen::Index>(system.lambda_q_dim());
    }
  }

  // Sum over columns of diff(target, out); when grad is non-null it receives
  // d(sum)/d(out).
  double eval(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target, Eigen::MatrixXd* grad) const {
    if (kind_ == LossMetric::mse) {
      Eigen::MatrixXd r = out - target;
      if (grad) *grad = 2.0 * r;
      return r.squaredNorm();
    }
    double total = 0.0;
    if (grad) grad->resize(out.rows(), out.cols());
    Eigen::VectorXd lo(nq_), lt(nq_), cot(nq_), gq(d_);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      Eigen::VectorXd rp = (out.col(j).head(d_) - target.col(j).head(d_)).cwiseProduct(inv_sqrt2m_);
      Eigen::VectorXd qo = out.col(j).tail(d_), qt = target.col(j).tail(d_);
      system_.lambda_q(std::span<const double>(qo.data(), static_cast<std::size_t>(d_)),
                       std::span<double>(lo.data(), static_cast<std::size_t>(nq_)));
      system_.lambda_q(std::span<const double>(qt.data(), static_cast<std::size_t>(d_)),
                       std::span<double>(lt.data(), static_cast<std::size_t>(nq_)));
      Eigen::VectorXd rq = lo - lt;
      total += rp.squaredNorm() + rq.squaredNorm();
      if (grad) {
        grad->col(j).head(d_) = 2.0 * rp.cwiseProduct(inv_sqrt2m_);
        cot = 2.0 * rq;
        system_.lambda_q_vjp(std::span<const double>(qo.data(), static_cast<std::size_t>(d_)),
                             std::span<const double>(cot.data(), static_cast<std::size_t>(nq_)),
                             std::span<double>(gq.data(), static_cast<std::size_t>(d_)));
        grad->col(j).tail(d_) = gq;
      }
    }
    return total;
  }

 private:
  LossMetric kind_;
  const HamiltonianSystem& system_;
  int d_;
  Eigen::VectorXd inv_sqrt2m_;
  Eigen::Index nq_ = 0;
};

struct ChunkResult {
  double loss_sum = 0.0;  // un-normalized sum over steps and columns
  bool finite = true;
  std::optional<ResNetParams> grad;
};

ChunkResult run_chunk(const ResNetParams& P, const Batch& batch, Eigen::Index begin, Eigen::Index count, int S,
                      const Metric& metric, bool want_grad) {
  ChunkResult r;
  std::vector<StepCache> caches(static_cast<std::size_t>(S));
  std::vector<Eigen::MatrixXd> d_out(static_cast<std::size_t>(S));
  Eigen::MatrixXd x = batch.inputs.middleCols(begin, count);
  for (int i = 0; i < S; ++i) {
    const auto iz = static_cast<std::size_t>(i);
    Eigen::MatrixXd out = forward_cached(P, x, caches[iz]);
    if (!out.allFinite()) {
      r.finite = false;
      r.loss_sum = std::numeric_limits<double>::infinity();
      return r;
    }
    const Eigen::MatrixXd target = batch.targets[iz].middleCols(begin, count);
    r.loss_sum += metric.eval(out, target, want_grad ? &d_out[iz] : nullptr);
    x = std::move(out);
  }
  if (!std::isfinite(r.loss_sum)) {
    r.finite = false;
    return r;
  }
  if (!want_grad) return r;
  r.grad.emplace(P.L(), P.width(), P.d(), P.scaled_skip());
  Eigen::MatrixXd carry;
  for (int i = S - 1; i >= 0; --i) {
    const auto iz = static_cast<std::size_t>(i);
    Eigen::MatrixXd d = d_out[iz];
    if (i < S - 1) d += carry;
    carry = backward(P, caches[iz], d, *r.grad);
  }
  return r;
}

LossAndGradient evaluate(const ResNetParams& params, const Batch& batch, int S, LossMetric kind,
                         const HamiltonianSystem& system, unsigned workers, bool want_grad) {
  if (batch.inputs.rows() != params.io_dim()) throw DimensionError("loss: batch width does not match the network");
  if (S < 1 || static_cast<std::size_t>(S) > batch.targets.size()) throw ConfigError("loss: S exceeds target length");
  if (batch.size() == 0) throw DimensionError("loss: empty batch");
  const Metric metric(kind, system, params.d());
  const Eigen::Index B = batch.size();
  const auto chunks = static_cast<std::size_t>((B + kChunk - 1) / kChunk);
  std::vector<ChunkResult> parts(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
    parts[c] = run_chunk(params, batch, begin, std::min(kChunk, B - begin), S, metric, want_grad);
  });
  LossAndGradient out;
  const double norm = 1.0 / (static_cast<double>(S) * static_cast<double>(B));
  if (want_grad) out.grad = Eigen::VectorXd::Zero(params.theta.size());
  for (auto& p : parts) {
    if (!p.finite) {
      out.finite = false;
      out.loss = std::numeric_limits<double>::infinity();
      return out;
    }
    out.loss += p.loss_sum;
    if (want_grad) out.grad += p.grad->theta;
  }
  out.loss *= norm;
  if (want_grad) out.grad *= norm;
  return out;
}

}  // namespace

LossValue loss_multistep(const ResNetParams& params, const Batch& batch, int S, LossMetric metric,
                         const HamiltonianSystem& system) {
  LossAndGradient r = evaluate(params, batch, S, metric, system, 1, false);
  return {r.loss, r.finite};
}

LossAndGradient gradient(const ResNetParams& params, const Batch& batch, int S, LossMetric metric,
                         const HamiltonianSystem& system, unsigned workers) {
  return evaluate(params, batch, S, metric, system, workers, true);
}

AdamState adam_init(std::size_t n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return s;
}

void adam_step(AdamState& s, Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr, double weight_decay) {
  if (theta.size() != grad.size() || s.m.size() != theta.size()) throw DimensionError("adam_step: shape mismatch");
  ++s.t;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  if (weight_decay != 0.0) theta *= (1.0 - lr * weight_decay);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double mhat = s.m(i) / c1;
    const double vhat = s.v(i) / c2;
    theta(i) -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

double one_cycle_lr(long long step, long long total_steps, const OneCycle& sc) {
  if (total_steps <= 0 || step < 0 || step > total_steps) throw ConfigError("one_cycle_lr: step out of range");
  const double warm = sc.warmup_fraction * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  auto cos_ramp = [](double from, double to, double frac) {
    return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
  };
  if (s <= warm) return warm > 0.0 ? cos_ramp(sc.initial, sc.max, s / warm) : sc.max;
  return cos_ramp(sc.max, sc.final, (s - warm) / (static_cast<double>(total_steps) - warm));
}

void TrainConfig::validate() const {
  if (S < 1) throw ConfigError("train: S must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr.initial > 0.0) || !(lr.max > 0.0) || !(lr.final > 0.0)) {
    throw ConfigError("train: learning rates must be positive");
  }
  if (!(lr.warmup_fraction >= 0.0 && lr.warmup_fraction < 1.0)) throw ConfigError("train: warmup fraction in [0,1)");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
}

TrainResult train(const HamiltonianSystem& system, const TrainingSet& data, int L, int n, const TrainConfig& config,
                  bool scaled_skip) {
  config.validate();
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (config.S > data.S) throw ConfigError("train: S exceeds the dataset sequence length");
  require_same_dim(data.dim(), system.dim(), "train");

  TrainResult res;
  res.params = ResNetParams::he_init(L, n, static_cast<int>(system.dim()), config.seed, scaled_skip);
  const Batch full = make_batch(data, config.S);
  res.initial_loss = evaluate(res.params, full, config.S, config.metric, system, config.workers, false).loss;

  const std::size_t N = data.size();
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const long long per_epoch = static_cast<long long>((N + bs - 1) / bs);
  const long long total = per_epoch * config.epochs;
  AdamState opt = adam_init(res.params.size());
  Rng shuffle_rng(config.seed, 0x5348);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  long long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = N; i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < N; start += bs) {
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(N, start + bs)));
      const Batch batch = make_batch(data, idx, config.S);
      LossAndGradient g = gradient(res.params, batch, config.S, config.metric, system, config.workers);
      if (!g.finite || !g.grad.allFinite()) {
        res.stopped_early = true;
        res.diagnostics = "non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step);
        break;
      }
      epoch_loss += g.loss * static_cast<double>(idx.size());
      const double lr = one_cycle_lr(std::min(step, total - 1), std::max(total - 1, 1LL), config.lr);
      adam_step(opt, res.params.theta, g.grad, lr, config.weight_decay);
      ++step;
    }
    if (res.stopped_early) break;
    res.history.push_back(epoch_loss / static_cast<double>(N));
  }
  res.final_loss = evaluate(res.params, full, config.S, config.metric, system, config.workers, false).loss;
  return res;
}

}  // namespace ppr
