#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "damarl/common.hpp"

namespace damarl {

enum class Activation { Identity, Relu, Tanh };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

inline Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

// Derivative of the activation as a function of the pre-activation z.
inline Eigen::MatrixXd activation_grad(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: {
      Eigen::ArrayXXd t = z.array().tanh();
      return (1.0 - t * t).matrix();
    }
  }
  return z;
}

// Gradients of a scalar objective with respect to every parameter array of an
// Mlp, same shapes layer by layer.
struct GradientSet {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  double squared_norm() const {
    double s = 0.0;
    for (const auto& m : dW) s += m.squaredNorm();
    for (const auto& v : db) s += v.squaredNorm();
    return s;
  }
  double global_norm() const { return std::sqrt(squared_norm()); }

  void scale(double f) {
    for (auto& m : dW) m *= f;
    for (auto& v : db) v *= f;
  }

  bool is_finite() const {
    for (const auto& m : dW)
      if (!m.allFinite()) return false;
    for (const auto& v : db)
      if (!v.allFinite()) return false;
    return true;
  }

  GradientSet& operator+=(const GradientSet& o) {
    for (std::size_t l = 0; l < dW.size(); ++l) {
      dW[l] += o.dW[l];
      db[l] += o.db[l];
    }
    return *this;
  }
};

// Fully-connected network with a fixed layer list.  Batches are stored
// column-wise (one sample per column) to match Eigen's column-major layout.
//
// The default shape used throughout training is input -> 128 -> 128 -> output
// with rectifier hidden units; critics use an identity output head, actors a
// squashing one.  Weights and biases are drawn U(-1/sqrt(fan_in),
// +1/sqrt(fan_in)) from the seeded generator, so identical seeds give
// bit-identical parameters.
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<int> layer_dims, Activation hidden, Activation output,
      std::uint64_t seed)
      : dims_(std::move(layer_dims)), hidden_(hidden), output_(output) {
    if (dims_.size() < 2) throw ConfigError("network needs at least two layer sizes");
    for (int d : dims_)
      if (d <= 0) throw ConfigError("layer sizes must be positive");
    Rng rng(seed);
    const int L = num_layers();
    W.resize(L);
    b.resize(L);
    for (int l = 0; l < L; ++l) {
      const int fan_in = dims_[l];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      W[l].resize(dims_[l + 1], dims_[l]);
      for (int j = 0; j < W[l].cols(); ++j)        // column-major fill order
        for (int i = 0; i < W[l].rows(); ++i) W[l](i, j) = rng.uniform(-bound, bound);
      b[l].resize(dims_[l + 1]);
      for (int i = 0; i < b[l].size(); ++i) b[l](i) = rng.uniform(-bound, bound);
    }
  }

  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  const std::vector<int>& dims() const { return dims_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  // Activations after (and pre-activations of) every layer for one batch;
  // act[0] is the input itself.
  struct Cache {
    std::vector<Eigen::MatrixXd> act;  // num_layers + 1 entries
    std::vector<Eigen::MatrixXd> pre;  // num_layers entries
  };

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim())
      throw ShapeError("forward: input has " + std::to_string(x.rows()) +
                       " rows, network expects " + std::to_string(input_dim()));
    if (cache) {
      cache->act.assign(1, x);
      cache->pre.clear();
    }
    Eigen::MatrixXd a = x;
    for (int l = 0; l < num_layers(); ++l) {
      Eigen::MatrixXd z = (W[l] * a).colwise() + b[l];
      a = apply_activation(l + 1 == num_layers() ? output_ : hidden_, z);
      if (cache) {
        cache->pre.push_back(std::move(z));
        cache->act.push_back(a);
      }
    }
    return a;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    return forward_batch(x);
  }

  // Reverse-mode gradients of sum_batch <upstream_col, output_col> with
  // respect to all parameters; if input_grad is non-null it also receives
  // d(objective)/d(input), the path that carries dQ/da into actor updates.
  GradientSet backward_batch(const Cache& cache, const Eigen::MatrixXd& upstream,
                             Eigen::MatrixXd* input_grad = nullptr) const {
    const int L = num_layers();
    if (static_cast<int>(cache.act.size()) != L + 1)
      throw ShapeError("backward: cache does not match this network");
    if (upstream.rows() != output_dim() || upstream.cols() != cache.act[0].cols())
      throw ShapeError("backward: upstream gradient has wrong shape");
    GradientSet g;
    g.dW.resize(L);
    g.db.resize(L);
    Eigen::MatrixXd delta;
    for (int l = L - 1; l >= 0; --l) {
      const Activation act = (l == L - 1) ? output_ : hidden_;
      if (l == L - 1)
        delta = upstream.cwiseProduct(activation_grad(act, cache.pre[l]));
      else
        delta = (W[l + 1].transpose() * delta)
                    .cwiseProduct(activation_grad(act, cache.pre[l]));
      g.dW[l] = delta * cache.act[l].transpose();
      g.db[l] = delta.rowwise().sum();
    }
    if (input_grad) *input_grad = W[0].transpose() * delta;
    return g;
  }

  GradientSet zero_gradients() const {
    GradientSet g;
    g.dW.reserve(num_layers());
    g.db.reserve(num_layers());
    for (int l = 0; l < num_layers(); ++l) {
      g.dW.push_back(Eigen::MatrixXd::Zero(W[l].rows(), W[l].cols()));
      g.db.push_back(Eigen::VectorXd::Zero(b[l].size()));
    }
    return g;
  }

  bool same_shape(const Mlp& o) const {
    return dims_ == o.dims_;
  }

  bool all_finite() const {
    for (const auto& m : W)
      if (!m.allFinite()) return false;
    for (const auto& v : b)
      if (!v.allFinite()) return false;
    return true;
  }

  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

 private:
  std::vector<int> dims_;
  Activation hidden_ = Activation::Relu;
  Activation output_ = Activation::Identity;
};

// Smallest |pre-activation| over all rectified units when evaluating x
// (+infinity if nothing is rectified).  Central finite differences assume the
// objective is smooth throughout the probe ball; a rectifier kink closer than
// the probe epsilon (times the local input scale) invalidates the numeric
// estimate itself, so gradient checks should redraw such inputs.
inline double min_kink_distance(const Mlp& net, const Eigen::VectorXd& x) {
  Mlp::Cache cache;
  net.forward_batch(x, &cache);
  double closest = std::numeric_limits<double>::infinity();
  for (int l = 0; l < net.num_layers(); ++l) {
    const Activation act =
        (l == net.num_layers() - 1) ? net.output_activation() : net.hidden_activation();
    if (act != Activation::Relu) continue;
    closest = std::min(closest, cache.pre[l].cwiseAbs().minCoeff());
  }
  return closest;
}

// Worst relative error between analytic gradients and central finite
// differences of the scalar objective <probe, forward(x)> over every weight,
// bias and input coordinate.  The probe vector is drawn from `seed` so the
// check covers a non-axis-aligned output direction.
inline double grad_check(const Mlp& net, const Eigen::VectorXd& x, double epsilon,
                         std::uint64_t seed = 12345) {
  if (epsilon <= 1e-8 || epsilon >= 1e-3)
    throw ConfigError("grad_check: epsilon must lie in (1e-8, 1e-3)");
  Rng rng(seed);
  Eigen::VectorXd probe(net.output_dim());
  for (int i = 0; i < probe.size(); ++i) probe(i) = rng.uniform(-1.0, 1.0);

  Mlp::Cache cache;
  net.forward_batch(x, &cache);
  Eigen::MatrixXd input_grad;
  GradientSet g = net.backward_batch(cache, probe, &input_grad);

  Mlp probe_net = net;  // mutated copy for finite differences
  auto objective = [&](const Mlp& m) { return probe.dot(m.forward(x)); };
  double worst = 0.0;
  auto update_worst = [&](double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1.0});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };

  for (int l = 0; l < net.num_layers(); ++l) {
    for (int j = 0; j < net.W[l].cols(); ++j)
      for (int i = 0; i < net.W[l].rows(); ++i) {
        const double saved = probe_net.W[l](i, j);
        probe_net.W[l](i, j) = saved + epsilon;
        const double up = objective(probe_net);
        probe_net.W[l](i, j) = saved - epsilon;
        const double dn = objective(probe_net);
        probe_net.W[l](i, j) = saved;
        update_worst(g.dW[l](i, j), (up - dn) / (2.0 * epsilon));
      }
    for (int i = 0; i < net.b[l].size(); ++i) {
      const double saved = probe_net.b[l](i);
      probe_net.b[l](i) = saved + epsilon;
      const double up = objective(probe_net);
      probe_net.b[l](i) = saved - epsilon;
      const double dn = objective(probe_net);
      probe_net.b[l](i) = saved;
      update_worst(g.db[l](i), (up - dn) / (2.0 * epsilon));
    }
  }

  // the input-gradient path, exercised exactly as actor updates consume it
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double saved = xp(i);
    xp(i) = saved + epsilon;
    const double up = probe.dot(net.forward(xp));
    xp(i) = saved - epsilon;
    const double dn = probe.dot(net.forward(xp));
    xp(i) = saved;
    update_worst(input_grad(i, 0), (up - dn) / (2.0 * epsilon));
  }
  return worst;
}

}  // namespace damarl
