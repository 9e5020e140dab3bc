#include "damarl/mlp.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace damarl;

namespace {

Mlp random_net(std::uint64_t seed) {
  Rng shape_rng(sub_seed(seed, 0));
  std::vector<int> dims = {2 + shape_rng.uniform_int(5), 4 + shape_rng.uniform_int(12),
                           4 + shape_rng.uniform_int(12), 1 + shape_rng.uniform_int(4)};
  Activation out =
      shape_rng.uniform() < 0.5 ? Activation::Identity : Activation::Tanh;
  return Mlp(dims, Activation::Relu, out, sub_seed(seed, 1));
}

// Plain nested-loop reference forward pass: no Eigen, no shared code with the
// implementation under test.
std::vector<double> loop_forward(const Mlp& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    const int rows = static_cast<int>(net.W[l].rows());
    const int cols = static_cast<int>(net.W[l].cols());
    std::vector<double> z(rows);
    for (int i = 0; i < rows; ++i) {
      double acc = net.b[l](i);
      for (int j = 0; j < cols; ++j) acc += net.W[l](i, j) * a[j];
      z[i] = acc;
    }
    const bool last = (l == net.num_layers() - 1);
    const Activation act = last ? net.output_activation() : net.hidden_activation();
    a.resize(rows);
    for (int i = 0; i < rows; ++i) {
      switch (act) {
        case Activation::Identity: a[i] = z[i]; break;
        case Activation::Relu: a[i] = z[i] > 0 ? z[i] : 0.0; break;
        case Activation::Tanh: a[i] = std::tanh(z[i]); break;
      }
    }
  }
  return a;
}

}  // namespace

TEST(MlpForward, ZeroParametersGiveZeroOutput) {
  Mlp net({3, 4, 4, 2}, Activation::Relu, Activation::Identity, 1);
  for (auto& w : net.W) w.setZero();
  for (auto& b : net.b) b.setZero();
  Eigen::VectorXd y = net.forward(Eigen::Vector3d(1.0, -2.0, 3.0));
  EXPECT_EQ(y, Eigen::VectorXd::Zero(2));
}

TEST(MlpForward, SingleAffineLayerByHand) {
  Mlp net({1, 1}, Activation::Relu, Activation::Identity, 1);
  net.W[0](0, 0) = 2.0;
  net.b[0](0) = 1.0;
  Eigen::VectorXd x(1);
  x << 3.0;
  EXPECT_EQ(net.forward(x)(0), 7.0);
}

TEST(MlpForward, MatchesLoopOracleOnRandomNets) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Mlp net = random_net(seed);
    Rng rng(sub_seed(seed, 2));
    std::vector<double> x(net.input_dim());
    Eigen::VectorXd xe(net.input_dim());
    for (int i = 0; i < net.input_dim(); ++i) {
      x[i] = rng.uniform(-2.0, 2.0);
      xe(i) = x[i];
    }
    std::vector<double> want = loop_forward(net, x);
    Eigen::VectorXd got = net.forward(xe);
    ASSERT_EQ(got.size(), static_cast<int>(want.size()));
    for (int i = 0; i < got.size(); ++i)
      EXPECT_NEAR(got(i), want[i], 1e-12) << "seed " << seed << " out " << i;
  }
}

TEST(MlpForward, BatchColumnsEqualPerSampleForward) {
  Mlp net = random_net(3);
  Rng rng(77);
  Eigen::MatrixXd X(net.input_dim(), 5);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < net.input_dim(); ++i) X(i, j) = rng.normal();
  Eigen::MatrixXd Y = net.forward_batch(X);
  // matrix-matrix and matrix-vector kernels may round differently, so this
  // is a near-equality, not a bit-equality
  for (int j = 0; j < 5; ++j)
    EXPECT_LT((Y.col(j) - net.forward(X.col(j))).cwiseAbs().maxCoeff(), 1e-14)
        << "column " << j;
}

TEST(MlpForward, RejectsWrongInputDimension) {
  Mlp net({3, 4, 2}, Activation::Relu, Activation::Identity, 1);
  EXPECT_THROW(net.forward(Eigen::Vector2d(1, 2)), ShapeError);
}

TEST(MlpInit, SameSeedGivesBitIdenticalParameters) {
  Mlp a({5, 16, 16, 3}, Activation::Relu, Activation::Tanh, 99);
  Mlp b({5, 16, 16, 3}, Activation::Relu, Activation::Tanh, 99);
  for (int l = 0; l < a.num_layers(); ++l) {
    EXPECT_EQ(a.W[l], b.W[l]);
    EXPECT_EQ(a.b[l], b.b[l]);
  }
  Mlp c({5, 16, 16, 3}, Activation::Relu, Activation::Tanh, 100);
  EXPECT_NE(a.W[0], c.W[0]);
}

TEST(MlpInit, FanInBoundRespected) {
  Mlp net({100, 64, 1}, Activation::Relu, Activation::Identity, 5);
  EXPECT_LE(net.W[0].cwiseAbs().maxCoeff(), 0.1);  // 1/sqrt(100)
  EXPECT_LE(net.W[1].cwiseAbs().maxCoeff(), 0.125);  // 1/sqrt(64)
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  Mlp net = random_net(4);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(net.input_dim(), 0.3);
  Mlp::Cache cache;
  net.forward_batch(x, &cache);
  Eigen::MatrixXd input_grad;
  GradientSet g = net.backward_batch(
      cache, Eigen::MatrixXd::Zero(net.output_dim(), 1), &input_grad);
  EXPECT_EQ(g.global_norm(), 0.0);
  EXPECT_EQ(input_grad.norm(), 0.0);
}

TEST(MlpBackward, LinearLayerGradientIsTheInput) {
  // y = w x + b: dy/dw = x, dy/db = 1, dy/dx = w
  Mlp net({1, 1}, Activation::Identity, Activation::Identity, 1);
  net.W[0](0, 0) = -1.7;
  net.b[0](0) = 0.4;
  Eigen::VectorXd x(1);
  x << 2.5;
  Mlp::Cache cache;
  net.forward_batch(x, &cache);
  Eigen::MatrixXd input_grad;
  GradientSet g = net.backward_batch(cache, Eigen::MatrixXd::Ones(1, 1), &input_grad);
  EXPECT_DOUBLE_EQ(g.dW[0](0, 0), 2.5);
  EXPECT_DOUBLE_EQ(g.db[0](0), 1.0);
  EXPECT_DOUBLE_EQ(input_grad(0, 0), -1.7);
}

TEST(MlpBackward, RejectsMismatchedUpstreamShape) {
  Mlp net = random_net(6);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(net.input_dim());
  Mlp::Cache cache;
  net.forward_batch(x, &cache);
  EXPECT_THROW(
      net.backward_batch(cache, Eigen::MatrixXd::Zero(net.output_dim() + 1, 1)),
      ShapeError);
  EXPECT_THROW(net.backward_batch(cache, Eigen::MatrixXd::Zero(net.output_dim(), 2)),
               ShapeError);
}

TEST(GradCheck, HundredRandomNetInputPairsBelowTolerance) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Mlp net = random_net(seed);
    Rng rng(sub_seed(seed, 3));
    Eigen::VectorXd x(net.input_dim());
    // redraw inputs whose rectifier pre-activations sit inside the probe
    // ball: there the finite-difference estimate itself is invalid
    do {
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-2.0, 2.0);
    } while (min_kink_distance(net, x) < 1e-3);
    double err = grad_check(net, x, 1e-5, sub_seed(seed, 4));
    EXPECT_LT(err, 1e-4) << "seed " << seed;
    worst = std::max(worst, err);
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(GradCheck, PurelyLinearNetIsExactToRounding) {
  Mlp net({4, 6, 3}, Activation::Identity, Activation::Identity, 8);
  Eigen::VectorXd x(4);
  x << 0.3, -1.2, 0.7, 2.0;
  EXPECT_LT(grad_check(net, x, 1e-5), 1e-9);
}

TEST(GradCheck, RejectsEpsilonOutsideValidRange) {
  Mlp net({2, 2}, Activation::Relu, Activation::Identity, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(grad_check(net, x, 1e-3), ConfigError);
  EXPECT_THROW(grad_check(net, x, 1e-8), ConfigError);
  EXPECT_THROW(grad_check(net, x, 0.0), ConfigError);
}

// The batched input-gradient path: column b of input_grad must equal the
// gradient computed sample-by-sample.
TEST(MlpBackward, BatchedInputGradientMatchesPerSample) {
  Mlp net = random_net(9);
  Rng rng(123);
  const int B = 4;
  Eigen::MatrixXd X(net.input_dim(), B);
  Eigen::MatrixXd up(net.output_dim(), B);
  for (int j = 0; j < B; ++j) {
    for (int i = 0; i < net.input_dim(); ++i) X(i, j) = rng.normal();
    for (int i = 0; i < net.output_dim(); ++i) up(i, j) = rng.normal();
  }
  Mlp::Cache cache;
  net.forward_batch(X, &cache);
  Eigen::MatrixXd input_grad;
  net.backward_batch(cache, up, &input_grad);
  for (int j = 0; j < B; ++j) {
    Mlp::Cache single;
    net.forward_batch(X.col(j), &single);
    Eigen::MatrixXd gj;
    net.backward_batch(single, up.col(j), &gj);
    EXPECT_LT((input_grad.col(j) - gj.col(0)).cwiseAbs().maxCoeff(), 1e-14);
  }
}
