#ifndef AMPNN_NETWORK_HPP
#define AMPNN_NETWORK_HPP

// Fully connected feed-forward network y^{k+1} = F(W^k y^k + b^k) whose
// hidden neurons may carry a secondary activation (amplifying or
// attenuating). The output layer is always linear.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ampnn/activation.hpp"
#include "ampnn/error.hpp"

namespace ampnn {

using Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultSoftplusSlope = 0.3;
inline constexpr double kDefaultAttenuation = 1.0;

template <typename Scalar>
struct NeuronRole {
  PrimaryActivation<Scalar> primary = PrimaryActivation<Scalar>::identity();
  SecondaryActivation<Scalar> secondary = SecondaryActivation<Scalar>::none();

  template <typename NewScalar>
  NeuronRole<NewScalar> cast() const {
    return {primary.template cast<NewScalar>(), secondary.template cast<NewScalar>()};
  }

  friend bool operator==(const NeuronRole&, const NeuronRole&) = default;
};

/// One hidden layer. Roles are laid out as [amplifying..., attenuating...,
/// ordinary...] when built from counts.
template <typename Scalar>
struct LayerSpec {
  Index width = 0;
  Index n_amplifying = 0;
  Index n_attenuating = 0;
  std::vector<NeuronRole<Scalar>> roles;

  static LayerSpec with_counts(
      Index width, Index n_amplifying, Index n_attenuating,
      PrimaryActivation<Scalar> primary =
          PrimaryActivation<Scalar>::parametric_softplus(Scalar(kDefaultSoftplusSlope)),
      Scalar b = Scalar(kDefaultAttenuation)) {
    LayerSpec spec;
    spec.width = width;
    spec.n_amplifying = n_amplifying;
    spec.n_attenuating = n_attenuating;
    if (width < 1 || n_amplifying < 0 || n_attenuating < 0 || n_amplifying + n_attenuating > width) {
      std::ostringstream msg;
      msg << "layer spec requires n_amplifying + n_attenuating <= width, got " << n_amplifying << " + "
          << n_attenuating << " with width " << width;
      throw ValidationError(msg.str());
    }
    const auto attenuate = SecondaryActivation<Scalar>::attenuate(b);
    spec.roles.reserve(static_cast<std::size_t>(width));
    for (Index j = 0; j < width; ++j) {
      NeuronRole<Scalar> role{primary, SecondaryActivation<Scalar>::none()};
      if (j < n_amplifying) {
        role.secondary = SecondaryActivation<Scalar>::amplify();
      } else if (j < n_amplifying + n_attenuating) {
        role.secondary = attenuate;
      }
      spec.roles.push_back(role);
    }
    return spec;
  }

  void validate(Index layer) const {
    auto fail = [layer](const std::string& what) {
      std::ostringstream msg;
      msg << "hidden layer " << layer + 1 << ": " << what;
      throw ValidationError(msg.str());
    };
    if (width < 1) fail("width must be at least 1");
    if (n_amplifying < 0 || n_attenuating < 0) fail("neuron counts must be non-negative");
    if (n_amplifying + n_attenuating > width) {
      std::ostringstream msg;
      msg << "n_amplifying + n_attenuating <= width violated (" << n_amplifying << " + " << n_attenuating
          << " > " << width << ")";
      fail(msg.str());
    }
    if (static_cast<Index>(roles.size()) != width) fail("roles list length must equal width");
    Index amplifying = 0;
    Index attenuating = 0;
    for (const auto& role : roles) {
      if (role.primary.kind == PrimaryKind::ParametricSoftplus &&
          !(role.primary.a >= Scalar(0) && role.primary.a < Scalar(1)))
        fail("parametric softplus slope outside [0, 1)");
      if (role.secondary.kind == SecondaryKind::Amplify) ++amplifying;
      if (role.secondary.kind == SecondaryKind::Attenuate) {
        if (!(role.secondary.b > Scalar(0))) fail("attenuation constant b must be positive");
        ++attenuating;
      }
    }
    if (amplifying != n_amplifying || attenuating != n_attenuating)
      fail("roles disagree with n_amplifying / n_attenuating");
  }

  template <typename NewScalar>
  LayerSpec<NewScalar> cast() const {
    LayerSpec<NewScalar> out;
    out.width = width;
    out.n_amplifying = n_amplifying;
    out.n_attenuating = n_attenuating;
    out.roles.reserve(roles.size());
    for (const auto& role : roles) out.roles.push_back(role.template cast<NewScalar>());
    return out;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Inclusive, 1-based range of hidden layers.
struct LayerRange {
  int first = 1;
  int last = 1;

  bool contains(int layer) const { return layer >= first && layer <= last; }
  friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

template <typename Scalar>
struct NetworkConfig {
  Index input_dim = 1;
  std::vector<LayerSpec<Scalar>> hidden_layers;
  Index output_dim = 1;
  // Hidden layers allowed to hold amplifying/attenuating neurons. Unset
  // means every hidden layer.
  std::optional<LayerRange> special_layers;

  int depth() const { return static_cast<int>(hidden_layers.size()); }

  LayerRange effective_special_layers() const {
    return special_layers.value_or(LayerRange{1, depth()});
  }

  void validate() const {
    if (input_dim < 1) throw ValidationError("input_dim must be at least 1");
    if (output_dim < 1) throw ValidationError("output_dim must be at least 1");
    if (special_layers) {
      const auto& r = *special_layers;
      if (r.first < 1 || r.last < r.first || r.last > depth()) {
        std::ostringstream msg;
        msg << "special layer range [" << r.first << ", " << r.last << "] must lie within [1, " << depth()
            << "]";
        throw ValidationError(msg.str());
      }
    }
    const LayerRange range = effective_special_layers();
    for (Index k = 0; k < static_cast<Index>(hidden_layers.size()); ++k) {
      const auto& layer = hidden_layers[static_cast<std::size_t>(k)];
      layer.validate(k);
      if (!range.contains(static_cast<int>(k) + 1) && (layer.n_amplifying != 0 || layer.n_attenuating != 0)) {
        std::ostringstream msg;
        msg << "hidden layer " << k + 1 << " lies outside the special layer range [" << range.first << ", "
            << range.last << "] but holds amplifying/attenuating neurons";
        throw ValidationError(msg.str());
      }
    }
  }

  template <typename NewScalar>
  NetworkConfig<NewScalar> cast() const {
    NetworkConfig<NewScalar> out;
    out.input_dim = input_dim;
    out.output_dim = output_dim;
    out.special_layers = special_layers;
    out.hidden_layers.reserve(hidden_layers.size());
    for (const auto& layer : hidden_layers) out.hidden_layers.push_back(layer.template cast<NewScalar>());
    return out;
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Weights and biases of every non-input layer. Layer k maps the output of
/// layer k-1 (or the network input) through a fan_out x fan_in matrix.
/// Gradients and optimizer moments reuse the same shape.
template <typename Scalar>
struct Parameters {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  static Parameters zeros_like(const Parameters& other) {
    Parameters out;
    out.weights.reserve(other.weights.size());
    out.biases.reserve(other.biases.size());
    for (const auto& w : other.weights) out.weights.push_back(Matrix<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : other.biases) out.biases.push_back(Vector<Scalar>::Zero(b.size()));
    return out;
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  bool same_shape(const Parameters& other) const {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k].rows() != other.weights[k].rows() || weights[k].cols() != other.weights[k].cols())
        return false;
    }
    for (std::size_t k = 0; k < biases.size(); ++k) {
      if (biases[k].size() != other.biases[k].size()) return false;
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }

  Index size() const {
    Index n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

  template <typename NewScalar>
  Parameters<NewScalar> cast() const {
    Parameters<NewScalar> out;
    for (const auto& w : weights) out.weights.push_back(w.template cast<NewScalar>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<NewScalar>());
    return out;
  }

  friend bool operator==(const Parameters& lhs, const Parameters& rhs) {
    if (!lhs.same_shape(rhs)) return false;
    for (std::size_t k = 0; k < lhs.weights.size(); ++k)
      if (lhs.weights[k] != rhs.weights[k]) return false;
    for (std::size_t k = 0; k < lhs.biases.size(); ++k)
      if (lhs.biases[k] != rhs.biases[k]) return false;
    return true;
  }
};

template <typename Scalar>
class Network {
 public:
  Network(NetworkConfig<Scalar> config, Parameters<Scalar> parameters)
      : config_(std::move(config)), params_(std::move(parameters)) {
    config_.validate();
    const auto layers = static_cast<std::size_t>(layer_count());
    if (params_.weights.size() != layers || params_.biases.size() != layers)
      throw ValidationError("parameter list does not match the number of layers");
    for (Index k = 0; k < layer_count(); ++k) {
      const auto& w = params_.weights[static_cast<std::size_t>(k)];
      const auto& b = params_.biases[static_cast<std::size_t>(k)];
      if (w.rows() != layer_width(k) || w.cols() != fan_in(k) || b.size() != layer_width(k)) {
        std::ostringstream msg;
        msg << "layer " << k << " expects a " << layer_width(k) << "x" << fan_in(k) << " weight matrix and "
            << layer_width(k) << " biases, got " << w.rows() << "x" << w.cols() << " and " << b.size();
        throw ValidationError(msg.str());
      }
    }
    if (!params_.all_finite()) throw ValidationError("network parameters must be finite");
  }

  const NetworkConfig<Scalar>& config() const { return config_; }
  const Parameters<Scalar>& parameters() const { return params_; }
  Parameters<Scalar>& parameters() { return params_; }

  Index input_dim() const { return config_.input_dim; }
  Index output_dim() const { return config_.output_dim; }

  /// Number of weighted layers: every hidden layer plus the output layer.
  Index layer_count() const { return static_cast<Index>(config_.hidden_layers.size()) + 1; }
  bool is_output_layer(Index k) const { return k == layer_count() - 1; }

  Index layer_width(Index k) const {
    return is_output_layer(k) ? config_.output_dim : config_.hidden_layers[static_cast<std::size_t>(k)].width;
  }
  Index fan_in(Index k) const { return k == 0 ? config_.input_dim : layer_width(k - 1); }

  const NeuronRole<Scalar>& role(Index k, Index j) const {
    return config_.hidden_layers[static_cast<std::size_t>(k)].roles[static_cast<std::size_t>(j)];
  }

  const Matrix<Scalar>& weights(Index k) const { return params_.weights[static_cast<std::size_t>(k)]; }
  const Vector<Scalar>& biases(Index k) const { return params_.biases[static_cast<std::size_t>(k)]; }

  template <typename NewScalar>
  Network<NewScalar> cast() const {
    return Network<NewScalar>(config_.template cast<NewScalar>(), params_.template cast<NewScalar>());
  }

  friend bool operator==(const Network& lhs, const Network& rhs) {
    return lhs.config_ == rhs.config_ && lhs.params_ == rhs.params_;
  }

 private:
  NetworkConfig<Scalar> config_;
  Parameters<Scalar> params_;
};

/// Record of one forward pass: for every non-input layer the weighted sum,
/// the post-secondary value y and the composite derivative F'. The output
/// layer is linear, so its y equals its pre-activation and its F' is 1.
template <typename Scalar>
struct ForwardTrace {
  std::vector<Vector<Scalar>> pre_activation;
  std::vector<Vector<Scalar>> y;
  std::vector<Vector<Scalar>> f_prime;

  const Vector<Scalar>& output() const { return y.back(); }

  void resize_for(const Network<Scalar>& net) {
    const auto layers = static_cast<std::size_t>(net.layer_count());
    pre_activation.resize(layers);
    y.resize(layers);
    f_prime.resize(layers);
    for (Index k = 0; k < net.layer_count(); ++k) {
      const auto i = static_cast<std::size_t>(k);
      pre_activation[i].resize(net.layer_width(k));
      y[i].resize(net.layer_width(k));
      f_prime[i].resize(net.layer_width(k));
    }
  }
};

namespace detail {

template <typename Scalar>
void check_input(const Network<Scalar>& net, const Eigen::Ref<const Vector<Scalar>>& x) {
  if (x.size() != net.input_dim()) {
    std::ostringstream msg;
    msg << "input has dimension " << x.size() << ", network expects " << net.input_dim();
    throw ValidationError(msg.str());
  }
  if (!x.allFinite()) throw DomainError("network input contains a non-finite value");
}

template <typename Scalar>
[[noreturn]] void throw_non_finite(Index layer) {
  std::ostringstream msg;
  msg << "non-finite value in layer " << layer;
  throw DivergenceError(msg.str());
}

}  // namespace detail

/// Fills `trace` (resized as needed) with one pass over `x`.
template <typename Scalar>
void forward_with_trace(const Network<Scalar>& net, const Eigen::Ref<const Vector<Scalar>>& x,
                        ForwardTrace<Scalar>& trace) {
  detail::check_input(net, x);
  if (trace.y.size() != static_cast<std::size_t>(net.layer_count())) trace.resize_for(net);
  for (Index k = 0; k < net.layer_count(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    auto& pre = trace.pre_activation[i];
    auto& y = trace.y[i];
    auto& fp = trace.f_prime[i];
    pre.resize(net.layer_width(k));
    y.resize(net.layer_width(k));
    fp.resize(net.layer_width(k));
    if (k == 0) {
      pre.noalias() = net.weights(k) * x;
    } else {
      pre.noalias() = net.weights(k) * trace.y[i - 1];
    }
    pre += net.biases(k);
    if (!pre.allFinite()) detail::throw_non_finite<Scalar>(k);
    if (net.is_output_layer(k)) {
      y = pre;
      fp.setOnes();
      continue;
    }
    for (Index j = 0; j < pre.size(); ++j) {
      const auto& role = net.role(k, j);
      const auto f = composite_activate(role.primary, role.secondary, pre[j]);
      y[j] = f.value;
      fp[j] = f.derivative;
    }
    if (!y.allFinite() || !fp.allFinite()) detail::throw_non_finite<Scalar>(k);
  }
}

template <typename Scalar>
std::pair<Vector<Scalar>, ForwardTrace<Scalar>> forward_with_trace(const Network<Scalar>& net,
                                                                   const Eigen::Ref<const Vector<Scalar>>& x) {
  ForwardTrace<Scalar> trace;
  trace.resize_for(net);
  forward_with_trace(net, x, trace);
  Vector<Scalar> out = trace.output();
  return {std::move(out), std::move(trace)};
}

template <typename Scalar>
Vector<Scalar> forward(const Network<Scalar>& net, const Eigen::Ref<const Vector<Scalar>>& x) {
  detail::check_input(net, x);
  Vector<Scalar> current = x;
  Vector<Scalar> pre;
  for (Index k = 0; k < net.layer_count(); ++k) {
    pre.resize(net.layer_width(k));
    pre.noalias() = net.weights(k) * current;
    pre += net.biases(k);
    if (!pre.allFinite()) detail::throw_non_finite<Scalar>(k);
    if (!net.is_output_layer(k)) {
      for (Index j = 0; j < pre.size(); ++j) {
        const auto& role = net.role(k, j);
        pre[j] = composite_activate(role.primary, role.secondary, pre[j]).value;
      }
      if (!pre.allFinite()) detail::throw_non_finite<Scalar>(k);
    }
    current.swap(pre);
  }
  return current;
}

/// Back-propagates dLoss/dOutput through a recorded pass. `gradient` is
/// resized to the network's parameter shape and overwritten.
template <typename Scalar>
void backward(const Network<Scalar>& net, const ForwardTrace<Scalar>& trace,
              const Eigen::Ref<const Vector<Scalar>>& x, const Eigen::Ref<const Vector<Scalar>>& output_error,
              Parameters<Scalar>& gradient) {
  const auto layers = static_cast<std::size_t>(net.layer_count());
  if (trace.y.size() != layers || trace.f_prime.size() != layers)
    throw ValidationError("trace does not match the network's layer count");
  for (Index k = 0; k < net.layer_count(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (trace.y[i].size() != net.layer_width(k) || trace.f_prime[i].size() != net.layer_width(k))
      throw ValidationError("trace does not match the network's layer widths");
  }
  if (x.size() != net.input_dim()) throw ValidationError("input dimension mismatch in backward");
  if (output_error.size() != net.output_dim()) throw ValidationError("output error dimension mismatch");
  if (!gradient.same_shape(net.parameters())) gradient = Parameters<Scalar>::zeros_like(net.parameters());

  Vector<Scalar> delta = output_error;
  Vector<Scalar> next;
  for (Index k = net.layer_count() - 1; k >= 0; --k) {
    const auto i = static_cast<std::size_t>(k);
    if (k == 0) {
      gradient.weights[i].noalias() = delta * x.transpose();
    } else {
      gradient.weights[i].noalias() = delta * trace.y[i - 1].transpose();
    }
    gradient.biases[i] = delta;
    if (k > 0) {
      next.noalias() = net.weights(k).transpose() * delta;
      next.array() *= trace.f_prime[i - 1].array();
      delta.swap(next);
    }
  }
}

template <typename Scalar>
Parameters<Scalar> backward(const Network<Scalar>& net, const ForwardTrace<Scalar>& trace,
                            const Eigen::Ref<const Vector<Scalar>>& x,
                            const Eigen::Ref<const Vector<Scalar>>& output_error) {
  Parameters<Scalar> gradient = Parameters<Scalar>::zeros_like(net.parameters());
  backward(net, trace, x, output_error, gradient);
  return gradient;
}

/// Glorot-uniform weights U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)) from a
/// 64-bit Mersenne Twister seeded with `seed`; zero biases.
template <typename Scalar>
Network<Scalar> build_network(const NetworkConfig<Scalar>& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 engine(seed);
  Parameters<Scalar> params;
  const Index layers = static_cast<Index>(config.hidden_layers.size()) + 1;
  for (Index k = 0; k < layers; ++k) {
    const Index fan_out = k == layers - 1 ? config.output_dim
                                          : config.hidden_layers[static_cast<std::size_t>(k)].width;
    const Index fan_in = k == 0 ? config.input_dim : config.hidden_layers[static_cast<std::size_t>(k - 1)].width;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix<Scalar> w(fan_out, fan_in);
    for (Index r = 0; r < fan_out; ++r)
      for (Index c = 0; c < fan_in; ++c) w(r, c) = static_cast<Scalar>(dist(engine));
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector<Scalar>::Zero(fan_out));
  }
  return Network<Scalar>(config, std::move(params));
}

/// Two identity/amplifying hidden neurons computing
/// x*y = ((x+y)^2 - (x-y)^2) / 4 exactly.
template <typename Scalar = double>
Network<Scalar> build_multiplier_network() {
  NetworkConfig<Scalar> config;
  config.input_dim = 2;
  config.output_dim = 1;
  config.hidden_layers.push_back(LayerSpec<Scalar>::with_counts(2, 2, 0, PrimaryActivation<Scalar>::identity()));
  Parameters<Scalar> params;
  Matrix<Scalar> hidden(2, 2);
  hidden << 1, 1, 1, -1;
  Matrix<Scalar> out(1, 2);
  out << Scalar(0.25), Scalar(-0.25);
  params.weights = {hidden, out};
  params.biases = {Vector<Scalar>::Zero(2), Vector<Scalar>::Zero(1)};
  return Network<Scalar>(std::move(config), std::move(params));
}

/// Forward pass over every column of `inputs` (input_dim x n). Returns an
/// output_dim x n matrix in the same column order.
template <typename Scalar>
Matrix<Scalar> predict_batch(const Network<Scalar>& net, const Eigen::Ref<const Matrix<Scalar>>& inputs) {
  Matrix<Scalar> outputs(net.output_dim(), inputs.cols());
  for (Index i = 0; i < inputs.cols(); ++i) {
    try {
      outputs.col(i) = forward<Scalar>(net, inputs.col(i));
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "batch input " << i << ": " << e.what();
      if (e.category() == ErrorCategory::Divergence) throw DivergenceError(msg.str());
      if (e.category() == ErrorCategory::Domain) throw DomainError(msg.str());
      throw ValidationError(msg.str());
    }
  }
  return outputs;
}

using NetworkD = Network<double>;
using NetworkConfigD = NetworkConfig<double>;
using LayerSpecD = LayerSpec<double>;
using ParametersD = Parameters<double>;
using ForwardTraceD = ForwardTrace<double>;

}  // namespace ampnn

#endif  // AMPNN_NETWORK_HPP
