#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "damarl/common.hpp"
#include "damarl/mlp.hpp"

namespace damarl {

// First-order parameter update.  Two modes:
//   Sgd  — theta <- theta - lr * g, exactly (used by deterministic tests)
//   Adam — adaptive update with bias-corrected first/second moments,
//          beta1 = 0.9, beta2 = 0.999, eps = 1e-8 (training default)
struct OptimizerState {
  enum class Mode { Sgd, Adam };

  Mode mode = Mode::Adam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;

  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;

  static OptimizerState sgd(double lr) {
    OptimizerState s;
    s.mode = Mode::Sgd;
    s.lr = lr;
    return s;
  }

  static OptimizerState adam(double lr) {
    OptimizerState s;
    s.mode = Mode::Adam;
    s.lr = lr;
    return s;
  }
};

// Applies one update in place.  Moment buffers are allocated on first use and
// must keep matching shapes afterwards.  Non-finite gradients are rejected
// before any parameter is touched.
inline void optimizer_step(Mlp& params, const GradientSet& g, OptimizerState& s) {
  const int L = params.num_layers();
  if (static_cast<int>(g.dW.size()) != L || static_cast<int>(g.db.size()) != L)
    throw ShapeError("optimizer_step: gradient layer count mismatch");
  for (int l = 0; l < L; ++l)
    if (g.dW[l].rows() != params.W[l].rows() || g.dW[l].cols() != params.W[l].cols() ||
        g.db[l].size() != params.b[l].size())
      throw ShapeError("optimizer_step: gradient shape mismatch at layer " +
                       std::to_string(l));
  if (!g.is_finite())
    throw NumericError("optimizer_step: non-finite gradient (step " +
                       std::to_string(s.step) + "); update rejected");

  if (s.mode == OptimizerState::Mode::Sgd) {
    ++s.step;
    for (int l = 0; l < L; ++l) {
      params.W[l] -= s.lr * g.dW[l];
      params.b[l] -= s.lr * g.db[l];
    }
    return;
  }

  if (s.mW.empty()) {
    s.mW.resize(L);
    s.vW.resize(L);
    s.mb.resize(L);
    s.vb.resize(L);
    for (int l = 0; l < L; ++l) {
      s.mW[l] = Eigen::MatrixXd::Zero(params.W[l].rows(), params.W[l].cols());
      s.vW[l] = s.mW[l];
      s.mb[l] = Eigen::VectorXd::Zero(params.b[l].size());
      s.vb[l] = s.mb[l];
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (int l = 0; l < L; ++l) {
    s.mW[l] = s.beta1 * s.mW[l] + (1.0 - s.beta1) * g.dW[l];
    s.vW[l] = s.beta2 * s.vW[l] + (1.0 - s.beta2) * g.dW[l].cwiseProduct(g.dW[l]);
    params.W[l].array() -=
        s.lr * (s.mW[l].array() / c1) / ((s.vW[l].array() / c2).sqrt() + s.eps);
    s.mb[l] = s.beta1 * s.mb[l] + (1.0 - s.beta1) * g.db[l];
    s.vb[l] = s.beta2 * s.vb[l] + (1.0 - s.beta2) * g.db[l].cwiseProduct(g.db[l]);
    params.b[l].array() -=
        s.lr * (s.mb[l].array() / c1) / ((s.vb[l].array() / c2).sqrt() + s.eps);
  }
  if (!params.all_finite())
    throw NumericError("optimizer_step: parameters became non-finite");
}

// Scales the gradient set so its global L2 norm does not exceed max_norm;
// returns the norm before clipping.
inline double clip_global_norm(GradientSet& g, double max_norm) {
  if (max_norm <= 0.0) throw ConfigError("clip_global_norm: max_norm must be positive");
  const double norm = g.global_norm();
  if (norm > max_norm) g.scale(max_norm / norm);
  return norm;
}

// Polyak averaging toward the online parameters:
//   theta' <- kappa * theta + (1 - kappa) * theta'
inline void soft_update(Mlp& target, const Mlp& source, double kappa) {
  if (kappa < 0.0 || kappa > 1.0)
    throw ConfigError("soft_update: kappa must lie in [0, 1], got " +
                      std::to_string(kappa));
  if (!target.same_shape(source))
    throw ShapeError("soft_update: source and target shapes differ");
  for (std::size_t l = 0; l < target.W.size(); ++l) {
    target.W[l] = kappa * source.W[l] + (1.0 - kappa) * target.W[l];
    target.b[l] = kappa * source.b[l] + (1.0 - kappa) * target.b[l];
  }
}

}  // namespace damarl
