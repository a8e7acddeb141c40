#ifndef AMPNN_TESTS_GRADIENT_ORACLE_HPP
#define AMPNN_TESTS_GRADIENT_ORACLE_HPP

// Test-only helpers: random networks covering every neuron role and a
// central finite-difference gradient computed in extended precision from
// the forward pass alone.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "ampnn/network.hpp"

namespace ampnn::testing {

struct RandomCase {
  NetworkD net;
  Eigen::VectorXd x;
  Eigen::VectorXd target;
};

/// Depth 1..max_depth, widths 1..10; every layer is all-amplifying,
/// all-attenuating, plain, or a random mixture. Hidden primaries are the
/// 0.3 parametric softplus or (occasionally) the identity.
inline RandomCase random_case(std::uint64_t seed, int min_depth = 1, int max_depth = 9) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  NetworkConfigD config;
  config.input_dim = uniform_int(1, 3);
  config.output_dim = uniform_int(1, 2);
  const int depth = uniform_int(min_depth, max_depth);
  for (int k = 0; k < depth; ++k) {
    const int width = uniform_int(1, 10);
    int n_amp = 0;
    int n_att = 0;
    switch (uniform_int(0, 3)) {
      case 0: n_amp = width; break;
      case 1: n_att = width; break;
      case 2: break;
      default:
        n_amp = uniform_int(0, width);
        n_att = uniform_int(0, width - n_amp);
    }
    const auto primary = uniform_int(0, 4) == 0
                             ? PrimaryActivation<double>::identity()
                             : PrimaryActivation<double>::parametric_softplus(kDefaultSoftplusSlope);
    const double b = std::array<double, 3>{0.25, 1.0, 4.0}[static_cast<std::size_t>(uniform_int(0, 2))];
    config.hidden_layers.push_back(LayerSpecD::with_counts(width, n_amp, n_att, primary, b));
  }
  NetworkD net = build_network(config, rng());
  for (auto& bias : net.parameters().biases)
    for (Index i = 0; i < bias.size(); ++i) bias[i] = uniform(-0.5, 0.5);

  Eigen::VectorXd x(config.input_dim);
  for (Index i = 0; i < x.size(); ++i) x[i] = uniform(-2.0, 2.0);
  Eigen::VectorXd target(config.output_dim);
  for (Index i = 0; i < target.size(); ++i) target[i] = uniform(-1.0, 1.0);
  return {std::move(net), std::move(x), std::move(target)};
}

template <typename Scalar>
Scalar squared_error(const Network<Scalar>& net, const Vector<Scalar>& x, const Vector<Scalar>& target) {
  return Scalar(0.5) * (forward<Scalar>(net, x) - target).squaredNorm();
}

/// d(1/2 |net(x) - target|^2) / d(theta) by central differences of step h,
/// evaluated on a long double copy of the network.
inline Parameters<long double> finite_difference_gradient(const NetworkD& net, const Eigen::VectorXd& x,
                                                          const Eigen::VectorXd& target, long double h = 1e-6L) {
  Network<long double> probe = net.cast<long double>();
  const Vector<long double> xl = x.cast<long double>();
  const Vector<long double> tl = target.cast<long double>();
  auto grad = Parameters<long double>::zeros_like(probe.parameters());
  auto central = [&](long double& theta) {
    const long double saved = theta;
    theta = saved + h;
    const long double up = squared_error(probe, xl, tl);
    theta = saved - h;
    const long double down = squared_error(probe, xl, tl);
    theta = saved;
    return (up - down) / (2.0L * h);
  };
  auto& params = probe.parameters();
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    for (Index c = 0; c < params.weights[k].cols(); ++c)
      for (Index r = 0; r < params.weights[k].rows(); ++r) grad.weights[k](r, c) = central(params.weights[k](r, c));
    for (Index r = 0; r < params.biases[k].size(); ++r) grad.biases[k][r] = central(params.biases[k][r]);
  }
  return grad;
}

/// Relative error below `rel`, or absolute error below `abs` where the
/// analytic component is smaller than `small`.
inline bool gradient_component_ok(double analytic, long double numeric, double rel = 1e-5, double abs = 1e-8,
                                  double small = 1e-3) {
  const long double a = analytic;
  const long double diff = std::fabs(a - numeric);
  if (std::fabs(analytic) < small) return diff < abs;
  return diff / std::max(std::fabs(a), std::fabs(numeric)) < rel;
}

struct GradientMismatch {
  Index count = 0;
  double worst_relative = 0.0;
  std::string first;
};

inline GradientMismatch compare_gradients(const ParametersD& analytic, const Parameters<long double>& numeric) {
  GradientMismatch out;
  auto check = [&](double a, long double n, const char* kind, std::size_t k, Index r, Index c) {
    const double rel = static_cast<double>(std::fabs(a - n) / std::max<long double>(std::fabs(n), 1e-300L));
    if (std::fabs(a) >= 1e-3) out.worst_relative = std::max(out.worst_relative, rel);
    if (!gradient_component_ok(a, n)) {
      if (out.count == 0) {
        std::ostringstream msg;
        msg << kind << " layer " << k << " (" << r << ", " << c << "): analytic " << a << " numeric "
            << static_cast<double>(n);
        out.first = msg.str();
      }
      ++out.count;
    }
  };
  for (std::size_t k = 0; k < analytic.weights.size(); ++k) {
    for (Index c = 0; c < analytic.weights[k].cols(); ++c)
      for (Index r = 0; r < analytic.weights[k].rows(); ++r)
        check(analytic.weights[k](r, c), numeric.weights[k](r, c), "weight", k, r, c);
    for (Index r = 0; r < analytic.biases[k].size(); ++r)
      check(analytic.biases[k][r], numeric.biases[k][r], "bias", k, r, 0);
  }
  return out;
}

}  // namespace ampnn::testing

#endif  // AMPNN_TESTS_GRADIENT_ORACLE_HPP
