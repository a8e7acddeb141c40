#ifndef AMPNN_TRAINING_HPP
#define AMPNN_TRAINING_HPP

// Per-sample (batch size one) ADAM training on squared error with an L2
// penalty on the weights, and the best-of-N run harness.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ampnn/dataset.hpp"
#include "ampnn/error.hpp"
#include "ampnn/network.hpp"

namespace ampnn {

struct TrainingConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2_lambda = 1e-5;
  int epochs = 20000;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;
  // Mean training loss is logged every `log_interval` epochs (and for the last one).
  int log_interval = 100;

  void validate() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

template <typename Scalar>
struct AdamState {
  Parameters<Scalar> m;
  Parameters<Scalar> v;
  std::int64_t t = 0;

  static AdamState for_network(const Network<Scalar>& net) {
    return {Parameters<Scalar>::zeros_like(net.parameters()), Parameters<Scalar>::zeros_like(net.parameters()), 0};
  }
};

template <typename Scalar>
struct Loss {
  Scalar value;
  Vector<Scalar> gradient;  // dLoss/dPrediction
};

/// loss = 1/2 sum (pred - target)^2, gradient = pred - target.
template <typename Scalar>
Loss<Scalar> mse_loss(const Eigen::Ref<const Vector<Scalar>>& predicted,
                      const Eigen::Ref<const Vector<Scalar>>& target) {
  if (predicted.size() != target.size()) {
    std::ostringstream msg;
    msg << "mse_loss: prediction has " << predicted.size() << " entries, target has " << target.size();
    throw ValidationError(msg.str());
  }
  Vector<Scalar> diff = predicted - target;
  const Scalar value = Scalar(0.5) * diff.squaredNorm();
  return {value, std::move(diff)};
}

template <typename Scalar>
struct L2Penalty {
  Scalar value;
  Parameters<Scalar> gradient;  // lambda * w on weights, zero on biases
};

namespace detail {
inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    std::ostringstream msg;
    msg << "L2 strength must be a finite non-negative number, got " << lambda;
    throw ValidationError(msg.str());
  }
}
}  // namespace detail

/// (lambda / 2) sum w^2 over every weight matrix; biases are not penalized.
template <typename Scalar>
L2Penalty<Scalar> l2_penalty(const Network<Scalar>& net, Scalar lambda) {
  detail::check_lambda(static_cast<double>(lambda));
  L2Penalty<Scalar> out{Scalar(0), Parameters<Scalar>::zeros_like(net.parameters())};
  const auto& weights = net.parameters().weights;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.value += weights[k].squaredNorm();
    out.gradient.weights[k] = lambda * weights[k];
  }
  out.value *= lambda / Scalar(2);
  return out;
}

/// gradient.weights += lambda * w. A zero lambda leaves `gradient` untouched.
template <typename Scalar>
void add_l2_gradient(const Parameters<Scalar>& params, Scalar lambda, Parameters<Scalar>& gradient) {
  if (lambda == Scalar(0)) return;
  for (std::size_t k = 0; k < params.weights.size(); ++k) gradient.weights[k] += lambda * params.weights[k];
}

namespace detail {

template <typename Scalar>
[[noreturn]] void throw_non_finite_gradient(const Parameters<Scalar>& grads) {
  std::ostringstream msg;
  msg << "non-finite gradient";
  for (std::size_t k = 0; k < grads.weights.size(); ++k) {
    const auto& w = grads.weights[k];
    for (Index c = 0; c < w.cols(); ++c)
      for (Index r = 0; r < w.rows(); ++r)
        if (!std::isfinite(static_cast<double>(w(r, c)))) {
          msg << " at weight (layer " << k << ", row " << r << ", col " << c << ")";
          throw DivergenceError(msg.str());
        }
    const auto& b = grads.biases[k];
    for (Index r = 0; r < b.size(); ++r)
      if (!std::isfinite(static_cast<double>(b[r]))) {
        msg << " at bias (layer " << k << ", row " << r << ")";
        throw DivergenceError(msg.str());
      }
  }
  throw DivergenceError(msg.str());
}

template <typename Dst, typename Src>
void adam_update(Dst& param, Dst& m, Dst& v, const Src& g, double lr, double beta1, double beta2, double eps,
                 double correction1, double correction2) {
  using Scalar = typename Dst::Scalar;
  m = Scalar(beta1) * m + Scalar(1.0 - beta1) * g;
  v = Scalar(beta2) * v + Scalar(1.0 - beta2) * g.cwiseProduct(g);
  param.array() -= Scalar(lr) * (m.array() / Scalar(correction1)) /
                   ((v.array() / Scalar(correction2)).sqrt() + Scalar(eps));
}

}  // namespace detail

/// One bias-corrected ADAM update of every weight and bias:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
template <typename Scalar>
void adam_step(Network<Scalar>& net, const Parameters<Scalar>& grads, AdamState<Scalar>& state,
               const TrainingConfig& cfg) {
  auto& params = net.parameters();
  if (!grads.same_shape(params) || !state.m.same_shape(params) || !state.v.same_shape(params))
    throw ValidationError("adam_step: gradient or optimizer state shape does not match the network");
  if (!grads.all_finite()) detail::throw_non_finite_gradient(grads);
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    detail::adam_update(params.weights[k], state.m.weights[k], state.v.weights[k], grads.weights[k],
                        cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, correction1, correction2);
    detail::adam_update(params.biases[k], state.m.biases[k], state.v.biases[k], grads.biases[k],
                        cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, correction1, correction2);
  }
}

struct LossRecord {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
};

struct RunResult {
  NetworkD trained;
  double final_train_loss = 0.0;
  EvalReport eval;
  std::uint64_t run_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::vector<LossRecord> loss_log;
};

using Evaluator = std::function<EvalReport(const NetworkD&)>;

/// Sample visiting order for one epoch; a permutation of [0, n) that
/// depends only on (shuffle_seed, epoch).
std::vector<Index> epoch_order(Index n, std::uint64_t shuffle_seed, int epoch);

/// Trains a freshly initialized network (seeded by tcfg.init_seed) with one
/// ADAM step per sample. Throws DivergenceError naming the epoch and sample
/// when any loss, gradient or activation becomes non-finite.
RunResult train(const NetworkConfigD& config, const TrainingConfig& tcfg, const Dataset& data,
                const Evaluator& evaluate);

/// Mean per-sample loss of `net` over `data`.
double mean_training_loss(const NetworkD& net, const Dataset& data);

struct RunOutcome {
  int run_index = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::optional<RunResult> result;
  std::string failure;
};

struct BestOfN {
  std::size_t best_index = 0;
  std::vector<RunOutcome> runs;

  const RunResult& best() const { return *runs[best_index].result; }
};

inline std::uint64_t run_init_seed(std::uint64_t base_seed, int k) { return base_seed + static_cast<std::uint64_t>(k); }
inline std::uint64_t run_shuffle_seed(std::uint64_t base_seed, int k) {
  return base_seed + 10000 + static_cast<std::uint64_t>(k);
}

/// Trains `n` independent runs (run k: init seed base+k, shuffle seed
/// base+10000+k) and picks the one with the lowest evaluation MAE, ties to
/// the lower index. Runs that diverge are recorded and skipped. Throws
/// DivergenceError if every run diverges. `threads == 0` uses the hardware
/// concurrency; results are ordered by run index regardless.
BestOfN best_of_n(const NetworkConfigD& config, const TrainingConfig& tcfg, const Dataset& data, int n,
                  std::uint64_t base_seed, const Evaluator& evaluate, unsigned threads = 0);

}  // namespace ampnn

#endif  // AMPNN_TRAINING_HPP
