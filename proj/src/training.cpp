#include "ampnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <random>
#include <thread>

namespace ampnn {

void TrainingConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("training config: " + what); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) fail("l2_lambda must be non-negative");
  if (epochs < 1) fail("epochs must be at least 1");
  if (log_interval < 1) fail("log_interval must be at least 1");
}

std::vector<Index> epoch_order(Index n, std::uint64_t shuffle_seed, int epoch) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::seed_seq seq{static_cast<std::uint32_t>(shuffle_seed), static_cast<std::uint32_t>(shuffle_seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 engine(seq);
  std::shuffle(order.begin(), order.end(), engine);
  return order;
}

namespace {

void check_dataset(const NetworkConfigD& config, const Dataset& data) {
  if (data.size() == 0) throw ValidationError("training dataset is empty");
  if (data.input_dim() != config.input_dim) {
    std::ostringstream msg;
    msg << "dataset input dimension " << data.input_dim() << " does not match network input_dim "
        << config.input_dim;
    throw ValidationError(msg.str());
  }
  if (data.targets.size() != data.size()) throw ValidationError("dataset inputs and targets differ in length");
  if (config.output_dim != 1) throw ValidationError("scalar regression targets require output_dim = 1");
}

[[noreturn]] void rethrow_diverged(const Error& e, int epoch, Index sample) {
  std::ostringstream msg;
  msg << "training diverged at epoch " << epoch + 1 << ", sample " << sample << ": " << e.what();
  throw DivergenceError(msg.str());
}

}  // namespace

double mean_training_loss(const NetworkD& net, const Dataset& data) {
  double sum = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const double err = forward<double>(net, data.inputs.col(i))[0] - data.targets[i];
    sum += 0.5 * err * err;
  }
  return sum / static_cast<double>(data.size());
}

RunResult train(const NetworkConfigD& config, const TrainingConfig& tcfg, const Dataset& data,
                const Evaluator& evaluate) {
  tcfg.validate();
  config.validate();
  check_dataset(config, data);

  NetworkD net = build_network(config, tcfg.init_seed);
  auto state = AdamState<double>::for_network(net);
  ForwardTraceD trace;
  trace.resize_for(net);
  ParametersD grad = ParametersD::zeros_like(net.parameters());
  Eigen::VectorXd target(1);
  std::vector<LossRecord> log;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), tcfg.shuffle_seed, epoch);
    double epoch_loss = 0.0;
    for (const Index i : order) {
      try {
        const auto x = data.inputs.col(i);
        forward_with_trace<double>(net, x, trace);
        target[0] = data.targets[i];
        const auto loss = mse_loss<double>(trace.output(), target);
        if (!std::isfinite(loss.value)) throw DivergenceError("non-finite loss");
        epoch_loss += loss.value;
        backward<double>(net, trace, x, loss.gradient, grad);
        add_l2_gradient(net.parameters(), tcfg.l2_lambda, grad);
        adam_step(net, grad, state, tcfg);
      } catch (const DivergenceError& e) {
        rethrow_diverged(e, epoch, i);
      } catch (const DomainError& e) {
        rethrow_diverged(e, epoch, i);
      }
    }
    if ((epoch + 1) % tcfg.log_interval == 0 || epoch + 1 == tcfg.epochs)
      log.push_back({epoch + 1, epoch_loss / static_cast<double>(data.size())});
  }
  if (!net.parameters().all_finite()) throw DivergenceError("training produced non-finite parameters");

  double final_loss = 0.0;
  try {
    final_loss = mean_training_loss(net, data);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string("final training loss: ") + e.what());
  }
  if (!std::isfinite(final_loss)) throw DivergenceError("non-finite final training loss");
  EvalReport report = evaluate ? evaluate(net) : EvalReport{};
  return RunResult{std::move(net), final_loss, std::move(report), tcfg.init_seed, tcfg.shuffle_seed,
                   std::move(log)};
}

BestOfN best_of_n(const NetworkConfigD& config, const TrainingConfig& tcfg, const Dataset& data, int n,
                  std::uint64_t base_seed, const Evaluator& evaluate, unsigned threads) {
  if (n < 1) throw ValidationError("best_of_n requires n >= 1");
  tcfg.validate();
  config.validate();

  BestOfN out;
  out.runs.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto& run = out.runs[static_cast<std::size_t>(k)];
    run.run_index = k;
    run.init_seed = run_init_seed(base_seed, k);
    run.shuffle_seed = run_shuffle_seed(base_seed, k);
  }

  auto execute = [&](std::size_t k) {
    auto& run = out.runs[k];
    TrainingConfig cfg = tcfg;
    cfg.init_seed = run.init_seed;
    cfg.shuffle_seed = run.shuffle_seed;
    try {
      run.result = train(config, cfg, data, evaluate);
    } catch (const DivergenceError& e) {
      run.failure = e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  if (threads <= 1) {
    for (std::size_t k = 0; k < out.runs.size(); ++k) execute(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < out.runs.size(); k = next++) execute(k);
      });
  }

  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < out.runs.size(); ++k) {
    const auto& run = out.runs[k];
    if (!run.result) continue;
    if (!best || run.result->eval.mae < out.runs[*best].result->eval.mae) best = k;
  }
  if (!best) {
    std::ostringstream msg;
    msg << "all " << n << " runs diverged; first failure: " << out.runs.front().failure;
    throw DivergenceError(msg.str());
  }
  out.best_index = *best;
  return out;
}

}  // namespace ampnn
