#ifndef AMPNN_DATASET_HPP
#define AMPNN_DATASET_HPP

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace ampnn {

/// Where a dataset came from. `kind` is "grid", "random" or "file".
struct DatasetProvenance {
  std::string kind = "grid";
  std::string target;
  Eigen::Index count = 0;
  std::uint64_t seed = 0;
  std::string path;
};

/// Supervised regression samples, one sample per column of `inputs`
/// (input_dim x n) with the scalar target in `targets`.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
  DatasetProvenance provenance;

  Eigen::Index size() const { return inputs.cols(); }
  Eigen::Index input_dim() const { return inputs.rows(); }

  friend bool operator==(const Dataset& lhs, const Dataset& rhs) {
    return lhs.inputs.rows() == rhs.inputs.rows() && lhs.inputs.cols() == rhs.inputs.cols() &&
           lhs.targets.size() == rhs.targets.size() && lhs.inputs == rhs.inputs && lhs.targets == rhs.targets;
  }
};

/// Error statistics of a network against an exact target over a dense grid.
/// `sd` is the population standard deviation of the signed error.
struct EvalReport {
  double mae = 0.0;
  double sd = 0.0;
  double max_abs_error = 0.0;
  Eigen::VectorXd max_error_location;
  std::string target;
  Eigen::Index grid_resolution = 0;
  Eigen::Index grid_points = 0;
};

}  // namespace ampnn

#endif  // AMPNN_DATASET_HPP
