#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ampnn/network.hpp"
#include "support/gradient_oracle.hpp"

namespace ampnn {
namespace {

NetworkConfigD uniform_config(Index input_dim, int depth, Index width, Index n_amp = 0, Index n_att = 0) {
  NetworkConfigD config;
  config.input_dim = input_dim;
  for (int k = 0; k < depth; ++k) config.hidden_layers.push_back(LayerSpecD::with_counts(width, n_amp, n_att));
  return config;
}

// One hidden neuron of the given role, every weight 1 and every bias 0.
NetworkD single_neuron(PrimaryActivation<double> primary, SecondaryActivation<double> secondary) {
  NetworkConfigD config;
  LayerSpecD layer;
  layer.width = 1;
  layer.n_amplifying = secondary.kind == SecondaryKind::Amplify ? 1 : 0;
  layer.n_attenuating = secondary.kind == SecondaryKind::Attenuate ? 1 : 0;
  layer.roles = {NeuronRole<double>{primary, secondary}};
  config.hidden_layers.push_back(layer);
  ParametersD params;
  params.weights = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
  params.biases = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  return NetworkD(config, params);
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

TEST(LayerSpec, RolePlacementFollowsCounts) {
  const auto layer = LayerSpecD::with_counts(10, 4, 1);
  ASSERT_EQ(layer.roles.size(), 10u);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(layer.roles[j].secondary.kind, SecondaryKind::Amplify);
  EXPECT_EQ(layer.roles[4].secondary.kind, SecondaryKind::Attenuate);
  EXPECT_EQ(layer.roles[4].secondary.b, 1.0);
  for (int j = 5; j < 10; ++j) EXPECT_EQ(layer.roles[j].secondary.kind, SecondaryKind::None);
  for (const auto& role : layer.roles) {
    EXPECT_EQ(role.primary.kind, PrimaryKind::ParametricSoftplus);
    EXPECT_EQ(role.primary.a, 0.3);
  }
}

TEST(NetworkConfig, RejectsTooManySpecialNeurons) {
  EXPECT_THROW(LayerSpecD::with_counts(10, 11, 0), ValidationError);
  EXPECT_THROW(LayerSpecD::with_counts(10, 6, 5), ValidationError);
  auto config = uniform_config(1, 2, 10);
  config.hidden_layers[1].n_amplifying = 11;
  EXPECT_THROW(build_network(config, 42), ValidationError);
}

TEST(NetworkConfig, SpecialNeuronsMustStayInsideTheRange) {
  auto config = uniform_config(2, 6, 10, 3, 1);
  config.special_layers = LayerRange{2, 5};
  EXPECT_THROW(config.validate(), ValidationError);
  config.hidden_layers[0] = LayerSpecD::with_counts(10, 0, 0);
  config.hidden_layers[5] = LayerSpecD::with_counts(10, 0, 0);
  EXPECT_NO_THROW(config.validate());
  config.special_layers = LayerRange{0, 5};
  EXPECT_THROW(config.validate(), ValidationError);
  config.special_layers = LayerRange{2, 7};
  EXPECT_THROW(config.validate(), ValidationError);
}

TEST(NetworkConfig, RolesMustAgreeWithCounts) {
  auto config = uniform_config(1, 1, 3, 1, 0);
  config.hidden_layers[0].roles[1].secondary = SecondaryActivation<double>::amplify();
  EXPECT_THROW(config.validate(), ValidationError);
  config = uniform_config(1, 1, 3);
  config.hidden_layers[0].roles.pop_back();
  EXPECT_THROW(config.validate(), ValidationError);
}

TEST(BuildNetwork, SameSeedGivesIdenticalWeights) {
  const auto config = uniform_config(1, 5, 10);
  EXPECT_EQ(build_network(config, 42), build_network(config, 42));
  EXPECT_FALSE(build_network(config, 42) == build_network(config, 43));
}

TEST(BuildNetwork, GlorotBoundAndZeroBiases) {
  const auto net = build_network(uniform_config(1, 5, 10), 42);
  const double limit = std::sqrt(6.0 / 20.0);
  for (Index k = 1; k < 5; ++k) EXPECT_LE(net.weights(k).cwiseAbs().maxCoeff(), limit);
  EXPECT_LE(net.weights(0).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 11.0));
  for (Index k = 0; k < net.layer_count(); ++k) EXPECT_TRUE(net.biases(k).isZero(0.0));
  EXPECT_EQ(net.weights(0).rows(), 10);
  EXPECT_EQ(net.weights(0).cols(), 1);
  EXPECT_EQ(net.weights(5).rows(), 1);
  EXPECT_EQ(net.weights(5).cols(), 10);
}

TEST(Network, RejectsMisshapenParameters) {
  const auto config = uniform_config(2, 1, 3);
  ParametersD params;
  params.weights = {Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(1, 3)};
  params.biases = {Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(NetworkD(config, params), ValidationError);
  params.weights[0] = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_NO_THROW(NetworkD(config, params));
  params.weights[1](0, 0) = std::nan("");
  EXPECT_THROW(NetworkD(config, params), ValidationError);
}

TEST(Forward, ZeroWeightsGiveZeroOutput) {
  auto net = build_network(uniform_config(1, 3, 10), 1);
  net.parameters().set_zero();
  for (double x : {-5.0, 0.0, 3.3}) EXPECT_EQ(forward<double>(net, vec({x}))[0], 0.0);
}

TEST(Forward, SingleSquaringPath) {
  const auto net = single_neuron(PrimaryActivation<double>::identity(), SecondaryActivation<double>::amplify());
  EXPECT_EQ(forward<double>(net, vec({-2.0}))[0], 4.0);
}

TEST(Forward, RejectsBadInput) {
  const auto net = build_network(uniform_config(2, 1, 4), 1);
  EXPECT_THROW(forward<double>(net, vec({1.0})), ValidationError);
  EXPECT_THROW(forward<double>(net, vec({1.0, std::nan("")})), DomainError);
}

TEST(Forward, OverflowIsReportedWithLayer) {
  auto net = build_network(uniform_config(1, 6, 4, 4, 0), 5);
  for (auto& w : net.parameters().weights) w.setConstant(1e3);
  try {
    forward<double>(net, vec({1.0}));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos);
  }
}

TEST(ForwardWithTrace, SoftplusAmplifierAtZero) {
  const auto net = single_neuron(PrimaryActivation<double>::parametric_softplus(0.3),
                                 SecondaryActivation<double>::amplify());
  const auto [out, trace] = forward_with_trace<double>(net, vec({0.0}));
  EXPECT_NEAR(trace.y[0][0], 0.235421976819918698087, 1e-15);
  EXPECT_NEAR(trace.f_prime[0][0], 0.630763934309550231570, 1e-15);
  EXPECT_EQ(trace.pre_activation[0][0], 0.0);
  EXPECT_EQ(out[0], trace.y[0][0]);
}

TEST(ForwardWithTrace, AttenuatorExtremumKillsTheLocalGradient) {
  // identity primary so that a pre-activation of 1 reaches G at h = 1
  const auto net = single_neuron(PrimaryActivation<double>::identity(), SecondaryActivation<double>::attenuate(1.0));
  const auto [out, trace] = forward_with_trace<double>(net, vec({1.0}));
  EXPECT_EQ(trace.y[0][0], 0.5);
  EXPECT_EQ(trace.f_prime[0][0], 0.0);
  const auto grad = backward<double>(net, trace, vec({1.0}), vec({1.0}));
  EXPECT_EQ(grad.weights[0](0, 0), 0.0);
  EXPECT_EQ(grad.biases[0][0], 0.0);
}

TEST(ForwardWithTrace, ShapesAndCompositeAgreement) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = testing::random_case(seed);
    const auto [out, trace] = forward_with_trace<double>(c.net, c.x);
    ASSERT_EQ(trace.y.size(), static_cast<std::size_t>(c.net.layer_count()));
    for (Index k = 0; k < c.net.layer_count(); ++k) {
      const auto i = static_cast<std::size_t>(k);
      ASSERT_EQ(trace.y[i].size(), c.net.layer_width(k));
      ASSERT_EQ(trace.f_prime[i].size(), c.net.layer_width(k));
      ASSERT_EQ(trace.pre_activation[i].size(), c.net.layer_width(k));
      if (c.net.is_output_layer(k)) continue;
      for (Index j = 0; j < c.net.layer_width(k); ++j) {
        const auto& role = c.net.role(k, j);
        const auto f = composite_activate(role.primary, role.secondary, trace.pre_activation[i][j]);
        EXPECT_EQ(trace.y[i][j], f.value);
        EXPECT_EQ(trace.f_prime[i][j], f.derivative);
      }
    }
  }
}

TEST(ForwardWithTrace, BitwiseEqualToForward) {
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const auto c = testing::random_case(seed);
    const auto [out, trace] = forward_with_trace<double>(c.net, c.x);
    const Eigen::VectorXd plain = forward<double>(c.net, c.x);
    ASSERT_EQ(out.size(), plain.size());
    for (Index i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], plain[i]) << "seed " << seed;
  }
}

TEST(Backward, ZeroOutputErrorGivesZeroGradient) {
  const auto c = testing::random_case(11);
  const auto [out, trace] = forward_with_trace<double>(c.net, c.x);
  const auto grad = backward<double>(c.net, trace, c.x, Eigen::VectorXd::Zero(c.net.output_dim()));
  for (const auto& w : grad.weights) EXPECT_TRUE(w.isZero(0.0));
  for (const auto& b : grad.biases) EXPECT_TRUE(b.isZero(0.0));
}

TEST(Backward, LinearNeuronGradient) {
  NetworkConfigD config;  // no hidden layers
  ParametersD params;
  params.weights = {Eigen::MatrixXd::Constant(1, 1, 0.7)};
  params.biases = {Eigen::VectorXd::Constant(1, -0.2)};
  const NetworkD net(config, params);
  const auto [out, trace] = forward_with_trace<double>(net, vec({2.0}));
  const auto grad = backward<double>(net, trace, vec({2.0}), vec({1.0}));
  EXPECT_EQ(grad.weights[0](0, 0), 2.0);
  EXPECT_EQ(grad.biases[0][0], 1.0);
}

TEST(Backward, RejectsMismatchedShapes) {
  const auto c = testing::random_case(12);
  const auto [out, trace] = forward_with_trace<double>(c.net, c.x);
  EXPECT_THROW(backward<double>(c.net, trace, c.x, Eigen::VectorXd::Zero(c.net.output_dim() + 1)), ValidationError);
  auto broken = trace;
  broken.f_prime.pop_back();
  EXPECT_THROW(backward<double>(c.net, broken, c.x, Eigen::VectorXd::Zero(c.net.output_dim())), ValidationError);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNetworks) {
  for (std::uint64_t seed = 1000; seed < 1050; ++seed) {
    const auto c = testing::random_case(seed);
    const auto [out, trace] = forward_with_trace<double>(c.net, c.x);
    const auto analytic = backward<double>(c.net, trace, c.x, out - c.target);
    const auto numeric = testing::finite_difference_gradient(c.net, c.x, c.target);
    const auto mismatch = testing::compare_gradients(analytic, numeric);
    EXPECT_EQ(mismatch.count, 0) << "seed " << seed << ": " << mismatch.first;
  }
}

TEST(Backward, FullyAmplifyingAndAttenuatingLayers) {
  for (const auto& [n_amp, n_att] : {std::pair{8, 0}, std::pair{0, 8}}) {
    auto config = uniform_config(2, 4, 8, n_amp, n_att);
    auto net = build_network(config, 77);
    const Eigen::VectorXd x = vec({0.4, -1.1});
    const Eigen::VectorXd target = vec({0.3});
    const auto [out, trace] = forward_with_trace<double>(net, x);
    const auto analytic = backward<double>(net, trace, x, out - target);
    const auto mismatch = testing::compare_gradients(analytic, testing::finite_difference_gradient(net, x, target));
    EXPECT_EQ(mismatch.count, 0) << mismatch.first;
  }
}

// Plain MLP written against the primary activation only.
struct ReferenceMlp {
  static std::pair<Eigen::VectorXd, ParametersD> run(const NetworkD& net, const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& error_scale) {
    std::vector<Eigen::VectorXd> inputs{x};
    std::vector<Eigen::VectorXd> derivs;
    for (Index k = 0; k < net.layer_count(); ++k) {
      Eigen::VectorXd pre(net.layer_width(k));
      pre.noalias() = net.weights(k) * inputs.back();
      pre += net.biases(k);
      if (net.is_output_layer(k)) {
        inputs.push_back(pre);
        break;
      }
      Eigen::VectorXd y(pre.size());
      Eigen::VectorXd d(pre.size());
      for (Index j = 0; j < pre.size(); ++j) {
        y[j] = primary_activate(net.role(k, j).primary, pre[j]);
        d[j] = primary_derivative(net.role(k, j).primary, pre[j]);
      }
      inputs.push_back(y);
      derivs.push_back(d);
    }
    const Eigen::VectorXd output = inputs.back();
    ParametersD grad = ParametersD::zeros_like(net.parameters());
    Eigen::VectorXd delta = error_scale;
    for (Index k = net.layer_count() - 1; k >= 0; --k) {
      const auto i = static_cast<std::size_t>(k);
      grad.weights[i].noalias() = delta * inputs[i].transpose();
      grad.biases[i] = delta;
      if (k > 0) {
        Eigen::VectorXd next(net.weights(k).cols());
        next.noalias() = net.weights(k).transpose() * delta;
        next.array() *= derivs[i - 1].array();
        delta = next;
      }
    }
    return {output, grad};
  }
};

TEST(Forward, PlainNetworkReducesToStandardMlpBitwise) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto config = uniform_config(1 + trial % 2, 1 + trial % 6, 3 + trial % 8);
    auto net = build_network(config, rng());
    Eigen::VectorXd x = Eigen::VectorXd::Random(config.input_dim) * 3.0;
    const auto [out, trace] = forward_with_trace<double>(net, x);
    const Eigen::VectorXd err = out.array() - 0.25;
    const auto grad = backward<double>(net, trace, x, err);
    const auto [ref_out, ref_grad] = ReferenceMlp::run(net, x, err);
    EXPECT_EQ(out, ref_out);
    EXPECT_TRUE(grad == ref_grad);
  }
}

TEST(MultiplierNetwork, Examples) {
  const auto net = build_multiplier_network();
  EXPECT_EQ(forward<double>(net, vec({2.0, 3.0}))[0], 6.0);
  EXPECT_EQ(forward<double>(net, vec({-4.0, 5.0}))[0], -20.0);
  for (double x : {-9.5, 0.0, 1.25, 1e3}) EXPECT_EQ(forward<double>(net, vec({x, 0.0}))[0], 0.0);
}

TEST(MultiplierNetwork, ExactOnIntegerGrid) {
  const auto net = build_multiplier_network();
  for (int x = -10; x <= 10; ++x)
    for (int y = -10; y <= 10; ++y)
      EXPECT_LT(std::abs(forward<double>(net, vec({double(x), double(y)}))[0] - x * y), 1e-9);
}

// An attenuating neuron with a large b behaves like h / b near the origin and
// like 1 / h far from it; with b = 1e-4 and h = 4 the reciprocal is within
// 1e-5 relative.
TEST(DivisionByAttenuation, ApproximatesReciprocal) {
  const auto g = SecondaryActivation<double>::attenuate(1e-4);
  for (double h : {2.0, 4.0, 10.0, -5.0}) EXPECT_NEAR(secondary_activate(g, h) * h, 1.0, 1e-4);
  // x / y = x * (1 / y): reciprocal through one attenuating neuron, then the
  // exact multiplier
  const auto mul = build_multiplier_network();
  for (double x : {1.0, 3.0, -2.0})
    for (double y : {2.0, 4.0, 8.0}) {
      const double approx = forward<double>(mul, vec({x, secondary_activate(g, y)}))[0];
      EXPECT_NEAR(approx, x / y, 1e-4 * std::abs(x / y));
    }
}

TEST(Forward, FiniteOnDomainInputsAtInitialization) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto c = testing::random_case(seed + 5000);
    for (int i = 0; i < 25; ++i) {
      Eigen::VectorXd x(c.net.input_dim());
      for (Index d = 0; d < x.size(); ++d) x[d] = dist(rng);
      const auto [out, trace] = forward_with_trace<double>(c.net, x);
      for (std::size_t k = 0; k < trace.y.size(); ++k) {
        EXPECT_TRUE(trace.y[k].allFinite());
        EXPECT_TRUE(trace.f_prime[k].allFinite());
      }
    }
  }
}

TEST(PredictBatch, MatchesForwardInOrder) {
  const auto net = build_network(uniform_config(1, 2, 5, 1, 1), 3);
  EXPECT_EQ(predict_batch<double>(net, Eigen::MatrixXd(1, 0)).cols(), 0);
  Eigen::MatrixXd xs(1, 194);
  for (Index i = 0; i < xs.cols(); ++i) xs(0, i) = 0.03 * i;
  const Eigen::MatrixXd ys = predict_batch<double>(net, xs);
  ASSERT_EQ(ys.cols(), 194);
  for (Index i = 0; i < xs.cols(); ++i) EXPECT_EQ(ys(0, i), forward<double>(net, xs.col(i))[0]);
}

TEST(PredictBatch, ReportsTheOffendingIndex) {
  const auto net = build_network(uniform_config(1, 1, 3), 3);
  Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(1, 5);
  xs(0, 3) = std::nan("");
  try {
    predict_batch<double>(net, xs);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("input 3"), std::string::npos);
  }
}

TEST(Network, CastRoundTrip) {
  const auto c = testing::random_case(4);
  EXPECT_TRUE(c.net.cast<long double>().cast<double>() == c.net);
}

}  // namespace
}  // namespace ampnn
