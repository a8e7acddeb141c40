#include "ampnn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ampnn {

double target_1d(double x) {
  if (!std::isfinite(x) || !(x > -0.5)) {
    std::ostringstream msg;
    msg << "target_1d is defined for x > -0.5, got " << x;
    throw DomainError(msg.str());
  }
  return std::log(x + 0.5) + 0.2 * std::sin(x) + 0.4 * std::sin(2.0 * x) + 0.3 * std::sin(3.0 * x) -
         0.1 * std::sin(5.0 * x) - 0.2 * std::sin(7.0 * x) + 0.15 * std::sin(20.0 * x);
}

double target_ackley(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("target_ackley requires finite arguments");
  const double radial = -20.0 * std::exp(-0.2 * std::sqrt(0.5 * (x * x + y * y)));
  const double periodic = -std::exp(0.5 * (std::cos(2.0 * kPi * x) + std::cos(2.0 * kPi * y)));
  return radial + periodic + 20.0 + std::exp(1.0);
}

double TargetFunction::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_dim) {
    std::ostringstream msg;
    msg << name() << " expects " << input_dim << " inputs, got " << x.size();
    throw ValidationError(msg.str());
  }
  return kind == Target::OneDimensional ? target_1d(x[0]) : target_ackley(x[0], x[1]);
}

bool TargetFunction::in_domain(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_dim) return false;
  for (Index d = 0; d < input_dim; ++d)
    if (!domain[static_cast<std::size_t>(d)].contains(x[d])) return false;
  return true;
}

std::string TargetFunction::name() const { return kind == Target::OneDimensional ? "1d" : "ackley"; }

Index TargetFunction::default_grid_resolution() const { return kind == Target::OneDimensional ? 2001 : 201; }

TargetFunction target_function(Target kind) {
  if (kind == Target::OneDimensional) return {kind, 1, {{0.0, 2.0 * kPi}}};
  return {kind, 2, {{-3.0, 3.0}, {-3.0, 3.0}}};
}

TargetFunction target_function(const std::string& name) {
  if (name == "1d") return target_function(Target::OneDimensional);
  if (name == "ackley") return target_function(Target::Ackley2D);
  throw ValidationError("unknown target '" + name + "' (expected 1d or ackley)");
}

std::vector<double> linspace(double lo, double hi, Index resolution) {
  if (resolution < 2) throw ValidationError("a grid needs at least two points per dimension");
  std::vector<double> out(static_cast<std::size_t>(resolution));
  const double span = hi - lo;
  for (Index i = 0; i < resolution; ++i)
    out[static_cast<std::size_t>(i)] = lo + span * static_cast<double>(i) / static_cast<double>(resolution - 1);
  out.back() = hi;
  return out;
}

Dataset generate_1d_dataset(Index n) {
  if (n < 2) throw ValidationError("a 1d grid dataset needs at least two points");
  const auto xs = linspace(0.0, 2.0 * kPi, n);
  Dataset data;
  data.inputs.resize(1, n);
  data.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    data.inputs(0, i) = xs[static_cast<std::size_t>(i)];
    data.targets[i] = target_1d(xs[static_cast<std::size_t>(i)]);
  }
  data.provenance = {"grid", "1d", n, 0, ""};
  return data;
}

Dataset generate_2d_dataset(Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("a 2d dataset needs at least one point");
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  Dataset data;
  data.inputs.resize(2, n);
  data.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double x = coord(engine);
    const double y = coord(engine);
    data.inputs(0, i) = x;
    data.inputs(1, i) = y;
    data.targets[i] = target_ackley(x, y);
  }
  data.provenance = {"random", "ackley", n, seed, ""};
  return data;
}

EvalGrid evaluate_grid(const NetworkD& net, const TargetFunction& fn, Index grid_resolution) {
  if (net.input_dim() != fn.input_dim) {
    std::ostringstream msg;
    msg << "network input_dim " << net.input_dim() << " does not match target " << fn.name() << " (input_dim "
        << fn.input_dim << ")";
    throw ValidationError(msg.str());
  }
  if (net.output_dim() != 1) throw ValidationError("evaluation requires a scalar-output network");

  EvalGrid grid;
  if (fn.input_dim == 1) {
    const auto xs = linspace(fn.domain[0].lo, fn.domain[0].hi, grid_resolution);
    grid.points.resize(1, grid_resolution);
    for (Index i = 0; i < grid_resolution; ++i) grid.points(0, i) = xs[static_cast<std::size_t>(i)];
  } else {
    const auto xs = linspace(fn.domain[0].lo, fn.domain[0].hi, grid_resolution);
    const auto ys = linspace(fn.domain[1].lo, fn.domain[1].hi, grid_resolution);
    grid.points.resize(2, grid_resolution * grid_resolution);
    Index col = 0;
    for (const double x : xs)
      for (const double y : ys) {
        grid.points(0, col) = x;
        grid.points(1, col) = y;
        ++col;
      }
  }
  grid.predicted = predict_batch<double>(net, grid.points).row(0).transpose();
  grid.exact.resize(grid.points.cols());
  for (Index i = 0; i < grid.points.cols(); ++i) grid.exact[i] = fn(grid.points.col(i));
  return grid;
}

EvalReport summarize(const EvalGrid& grid, const TargetFunction& fn, Index grid_resolution) {
  const Eigen::VectorXd error = grid.predicted - grid.exact;
  const double n = static_cast<double>(error.size());
  EvalReport report;
  report.target = fn.name();
  report.grid_resolution = grid_resolution;
  report.grid_points = error.size();
  report.mae = error.cwiseAbs().sum() / n;
  const double mean = error.sum() / n;
  report.sd = std::sqrt((error.array() - mean).square().sum() / n);
  Index arg = 0;
  report.max_abs_error = error.cwiseAbs().maxCoeff(&arg);
  report.max_error_location = grid.points.col(arg);
  return report;
}

EvalReport evaluate(const NetworkD& net, const TargetFunction& fn, Index grid_resolution) {
  return summarize(evaluate_grid(net, fn, grid_resolution), fn, grid_resolution);
}

Evaluator make_evaluator(const TargetFunction& fn, Index grid_resolution) {
  return [fn, grid_resolution](const NetworkD& net) { return evaluate(net, fn, grid_resolution); };
}

NetworkConfigD NetworkPreset::config() const {
  NetworkConfigD cfg;
  cfg.input_dim = table == 1 ? 1 : 2;
  cfg.output_dim = 1;
  cfg.special_layers = special_layers;
  for (int layer = 1; layer <= depth; ++layer) {
    const bool special = special_layers.contains(layer);
    cfg.hidden_layers.push_back(
        LayerSpecD::with_counts(width, special ? n_amplifying : 0, special ? n_attenuating : 0));
  }
  return cfg;
}

namespace {

const std::vector<NetworkPreset>& all_presets() {
  static const std::vector<NetworkPreset> presets = {
      {"Network 1", 1, 5, 10, 0, 0, {1, 5}, 0.085079, 0.102091},
      {"Network 2", 1, 5, 10, 1, 0, {1, 5}, 0.048816, 0.066942},
      {"Network 3", 1, 5, 10, 0, 1, {1, 5}, 0.072480, 0.090168},
      {"Network 4", 1, 5, 10, 5, 0, {1, 5}, 0.005758, 0.013647},
      {"Network 5", 1, 5, 10, 4, 1, {1, 5}, 0.005485, 0.008369},
      {"Network 6", 1, 5, 10, 0, 5, {1, 5}, 0.013222, 0.023051},
      {"Network 7", 1, 9, 10, 0, 0, {1, 9}, 0.003283, 0.006276},
      {"Network 8", 1, 9, 10, 4, 1, {1, 5}, 0.002212, 0.005303},
      {"Network 9", 2, 6, 10, 0, 0, {1, 6}, 0.238485, 0.382490},
      {"Network 10", 2, 6, 10, 3, 1, {2, 5}, 0.056000, 0.089219},
  };
  return presets;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

NetworkPreset preset(const std::string& name) {
  for (const auto& p : all_presets())
    if (p.name == name) return p;
  throw ValidationError("unknown network preset '" + name + "'");
}

std::vector<NetworkPreset> table_presets(int table) {
  if (table != 1 && table != 2) throw ValidationError("table must be 1 or 2");
  std::vector<NetworkPreset> out;
  for (const auto& p : all_presets())
    if (p.table == table) out.push_back(p);
  return out;
}

ExtrapolationCheck extrapolation_check(const EvalReport& report, const Dataset& training) {
  const Index n = training.size();
  if (n < 2) throw ValidationError("nearest-neighbour spacing needs at least two training points");
  if (report.max_error_location.size() != training.input_dim())
    throw ValidationError("report and training set dimensions differ");
  std::vector<double> nn(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double d = (training.inputs.col(i) - training.inputs.col(j)).norm();
      nn[static_cast<std::size_t>(i)] = std::min(nn[static_cast<std::size_t>(i)], d);
      nn[static_cast<std::size_t>(j)] = std::min(nn[static_cast<std::size_t>(j)], d);
    }
  ExtrapolationCheck check;
  check.median_nn_distance = median(nn);
  check.max_error_distance =
      (training.inputs.colwise() - report.max_error_location).colwise().norm().minCoeff();
  check.outside_training_data = check.max_error_distance > check.median_nn_distance;
  return check;
}

Dataset table_dataset(int table, const ReproduceOptions& options) {
  if (table == 1) return generate_1d_dataset(options.n_train_1d);
  if (table == 2) return generate_2d_dataset(options.n_train_2d, options.dataset_seed);
  throw ValidationError("table must be 1 or 2");
}

ReproducedTable reproduce_table(int table, const TrainingConfig& tcfg, const ReproduceOptions& options) {
  if (options.n_runs < 1) throw ValidationError("n_runs must be at least 1");
  tcfg.validate();
  std::vector<NetworkPreset> rows = table_presets(table);
  if (!options.networks.empty()) {
    std::vector<NetworkPreset> selected;
    for (const auto& name : options.networks) {
      const auto p = preset(name);
      if (p.table != table) throw ValidationError(name + " does not belong to table " + std::to_string(table));
      selected.push_back(p);
    }
    std::sort(selected.begin(), selected.end(), [&](const NetworkPreset& a, const NetworkPreset& b) {
      auto index = [&](const NetworkPreset& p) {
        return std::find_if(rows.begin(), rows.end(), [&](const NetworkPreset& r) { return r.name == p.name; }) -
               rows.begin();
      };
      return index(a) < index(b);
    });
    selected.erase(std::unique(selected.begin(), selected.end(),
                               [](const NetworkPreset& a, const NetworkPreset& b) { return a.name == b.name; }),
                   selected.end());
    rows = std::move(selected);
  }

  ReproducedTable out;
  out.table = table;
  out.training = table_dataset(table, options);
  const TargetFunction fn = target_function(table == 1 ? Target::OneDimensional : Target::Ackley2D);
  const Index resolution = options.grid_resolution.value_or(fn.default_grid_resolution());
  const Evaluator evaluator = make_evaluator(fn, resolution);

  for (const auto& p : rows) {
    TableRow row;
    row.preset = p;
    try {
      BestOfN result =
          best_of_n(p.config(), tcfg, out.training, options.n_runs, options.base_seed, evaluator, options.threads);
      for (const auto& run : result.runs)
        if (!run.result) ++row.failed_runs;
      row.result = std::move(result);
    } catch (const DivergenceError& e) {
      row.failure = e.what();
      row.failed_runs = options.n_runs;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<OrderingClaim> ordering_claims(const ReproducedTable& table) {
  auto mae = [&](const std::string& name) -> std::optional<double> {
    for (const auto& row : table.rows)
      if (row.preset.name == name && row.result) return row.result->best().eval.mae;
    return std::nullopt;
  };
  auto status = [](bool evaluated, bool holds) {
    if (!evaluated) return std::string("not evaluated");
    return std::string(holds ? "reproduced" : "not reproduced");
  };
  auto less = [&](const std::string& lhs, const std::string& rhs) {
    const auto a = mae(lhs);
    const auto b = mae(rhs);
    return OrderingClaim{"MAE(" + lhs + ") < MAE(" + rhs + ")", status(a && b, a && b && *a < *b)};
  };

  std::vector<OrderingClaim> claims;
  if (table.table == 1) {
    for (const char* n : {"Network 2", "Network 3", "Network 4", "Network 5", "Network 6"})
      claims.push_back(less(n, "Network 1"));
    claims.push_back(less("Network 2", "Network 3"));
    claims.push_back(less("Network 4", "Network 6"));
    bool evaluated = true;
    bool holds = true;
    const auto best = mae("Network 5");
    for (const char* n : {"Network 1", "Network 2", "Network 3", "Network 4", "Network 6"}) {
      const auto other = mae(n);
      if (!best || !other) {
        evaluated = false;
        continue;
      }
      holds = holds && *best < *other;
    }
    claims.push_back({"Network 5 has the lowest MAE among Networks 1-6", status(evaluated, holds)});
    claims.push_back(less("Network 8", "Network 7"));
  } else {
    claims.push_back(less("Network 10", "Network 9"));
  }
  return claims;
}

}  // namespace ampnn
