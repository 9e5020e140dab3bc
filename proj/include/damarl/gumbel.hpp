#pragma once

#include <Eigen/Core>

#include "damarl/common.hpp"

namespace damarl {

// Numerically stable softmax (shift by the max before exponentiating).
inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw ShapeError("softmax: empty logits");
  Eigen::ArrayXd z = logits.array() - logits.maxCoeff();
  Eigen::ArrayXd e = z.exp();
  return (e / e.sum()).matrix();
}

inline int argmax(const Eigen::VectorXd& v) {
  Eigen::Index at = 0;
  v.maxCoeff(&at);
  return static_cast<int>(at);
}

inline Eigen::VectorXd one_hot(int index, int size) {
  if (index < 0 || index >= size) throw ShapeError("one_hot: index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  v(index) = 1.0;
  return v;
}

// Relaxed categorical sample: softmax((logits + g) / tau) with g drawn
// i.i.d. from Gumbel(0, 1).  tau -> 0 sharpens toward a one-hot draw from
// softmax(logits); adding Gumbel noise and taking the argmax samples that
// categorical distribution exactly, which is what the Monte-Carlo check in
// the test-suite leans on.
inline Eigen::VectorXd gumbel_softmax_sample(const Eigen::VectorXd& logits,
                                             double tau, Rng& rng) {
  if (tau <= 0.0) throw ConfigError("gumbel_softmax: tau must be positive");
  Eigen::VectorXd shifted(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    shifted(i) = (logits(i) + rng.gumbel()) / tau;
  return softmax(shifted);
}

// Straight-through sample: the returned action is the hard one-hot of the
// relaxed sample; `soft` (if given) receives the relaxed sample whose
// Jacobian stands in for the non-differentiable argmax on the backward pass.
inline Eigen::VectorXd gumbel_softmax_straight_through(
    const Eigen::VectorXd& logits, double tau, Rng& rng,
    Eigen::VectorXd* soft = nullptr) {
  Eigen::VectorXd y = gumbel_softmax_sample(logits, tau, rng);
  if (soft) *soft = y;
  return one_hot(argmax(y), static_cast<int>(y.size()));
}

// Backward pass of the straight-through estimator: maps the gradient
// arriving at the (hard) sample through the relaxed sample's Jacobian,
//   d y_i / d logit_j = (y_i (delta_ij - y_j)) / tau.
inline Eigen::VectorXd gumbel_softmax_backward(const Eigen::VectorXd& soft,
                                               const Eigen::VectorXd& upstream,
                                               double tau) {
  if (soft.size() != upstream.size())
    throw ShapeError("gumbel_softmax_backward: size mismatch");
  const double dot = soft.dot(upstream);
  return (soft.array() * (upstream.array() - dot) / tau).matrix();
}

}  // namespace damarl
