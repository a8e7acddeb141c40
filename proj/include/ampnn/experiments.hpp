#ifndef AMPNN_EXPERIMENTS_HPP
#define AMPNN_EXPERIMENTS_HPP

// Regression benchmarks: the two exact target functions, training-set
// generation, dense-grid evaluation and the published network presets.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ampnn/dataset.hpp"
#include "ampnn/network.hpp"
#include "ampnn/training.hpp"

namespace ampnn {

inline constexpr double kPi = 3.14159265358979323846;

/// y = ln(x + 0.5) + 0.2 sin x + 0.4 sin 2x + 0.3 sin 3x - 0.1 sin 5x
///     - 0.2 sin 7x + 0.15 sin 20x,  defined for x > -0.5.
double target_1d(double x);

/// Two-dimensional Ackley function, minimum 0 at the origin.
double target_ackley(double x, double y);

enum class Target { OneDimensional, Ackley2D };

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct TargetFunction {
  Target kind = Target::OneDimensional;
  Index input_dim = 1;
  std::vector<Interval> domain;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  bool in_domain(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::string name() const;
  Index default_grid_resolution() const;
};

TargetFunction target_function(Target kind);
/// Accepts "1d" and "ackley".
TargetFunction target_function(const std::string& name);

/// `n` evenly spaced points on [0, 2 pi], both endpoints included.
Dataset generate_1d_dataset(Index n);
/// `n` points drawn independently and uniformly from [-3, 3]^2.
Dataset generate_2d_dataset(Index n, std::uint64_t seed);

/// `resolution` evenly spaced points per dimension, endpoints exact.
std::vector<double> linspace(double lo, double hi, Index resolution);

/// Network output and exact value at every grid point; points are columns,
/// ascending in x, then in y.
struct EvalGrid {
  Eigen::MatrixXd points;
  Eigen::VectorXd predicted;
  Eigen::VectorXd exact;
};

EvalGrid evaluate_grid(const NetworkD& net, const TargetFunction& fn, Index grid_resolution);
EvalReport summarize(const EvalGrid& grid, const TargetFunction& fn, Index grid_resolution);
EvalReport evaluate(const NetworkD& net, const TargetFunction& fn, Index grid_resolution);
Evaluator make_evaluator(const TargetFunction& fn, Index grid_resolution);

struct NetworkPreset {
  std::string name;
  int table = 1;
  int depth = 0;
  int width = 10;
  int n_amplifying = 0;
  int n_attenuating = 0;
  LayerRange special_layers;
  double paper_mae = 0.0;
  double paper_sd = 0.0;

  Target target() const { return table == 1 ? Target::OneDimensional : Target::Ackley2D; }
  NetworkConfigD config() const;
};

/// "Network 1" ... "Network 10".
NetworkPreset preset(const std::string& name);
std::vector<NetworkPreset> table_presets(int table);

/// Nearest-neighbour geometry behind the extrapolation check: does the
/// largest error occur farther from the training data than the typical
/// spacing between training points?
struct ExtrapolationCheck {
  double max_error_distance = 0.0;
  double median_nn_distance = 0.0;
  bool outside_training_data = false;
};

ExtrapolationCheck extrapolation_check(const EvalReport& report, const Dataset& training);

struct ReproduceOptions {
  int n_runs = 10;
  std::uint64_t base_seed = 1;
  std::uint64_t dataset_seed = 2020;
  Index n_train_1d = 194;
  Index n_train_2d = 300;
  std::optional<Index> grid_resolution;
  std::vector<std::string> networks;  // empty: every row of the table
  unsigned threads = 0;
};

struct TableRow {
  NetworkPreset preset;
  std::optional<BestOfN> result;
  std::string failure;
  int failed_runs = 0;
};

struct ReproducedTable {
  int table = 1;
  Dataset training;
  std::vector<TableRow> rows;
};

/// Dataset used for a table: the 194-point grid (table 1) or 300 uniform
/// random points (table 2).
Dataset table_dataset(int table, const ReproduceOptions& options);

ReproducedTable reproduce_table(int table, const TrainingConfig& tcfg, const ReproduceOptions& options);

/// A published "lhs beats rhs" MAE ordering and whether the reproduction
/// shows it. `status` is "reproduced", "not reproduced" or "not evaluated".
struct OrderingClaim {
  std::string description;
  std::string status;
};

std::vector<OrderingClaim> ordering_claims(const ReproducedTable& table);

}  // namespace ampnn

#endif  // AMPNN_EXPERIMENTS_HPP
