#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "damarl/common.hpp"
#include "damarl/env.hpp"
#include "damarl/gumbel.hpp"
#include "damarl/mlp.hpp"
#include "damarl/optimizer.hpp"
#include "damarl/replay.hpp"

namespace damarl {

// The four actor-critic variants differ along two independent axes:
//   centralized  - does agent i's critic see every agent's observation and
//                  action (training-time only), or just its own?
//   delay aware  - do the policy and critic inputs include the pending
//                  (not yet executed) actions, or only the base observation?
enum class Variant { Ddpg, Ma, Da, Dama };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Ddpg: return "ddpg";
    case Variant::Ma: return "ma";
    case Variant::Da: return "da";
    case Variant::Dama: return "dama";
  }
  throw ConfigError("unknown variant");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "ddpg") return Variant::Ddpg;
  if (s == "ma") return Variant::Ma;
  if (s == "da") return Variant::Da;
  if (s == "dama") return Variant::Dama;
  throw ConfigError("unknown variant '" + s + "' (want ddpg|ma|da|dama)");
}

inline bool is_centralized(Variant v) { return v == Variant::Ma || v == Variant::Dama; }
inline bool is_delay_aware(Variant v) { return v == Variant::Da || v == Variant::Dama; }

// Per-agent interface description, decoupled from any live environment.
struct AgentIo {
  int base_obs_dim = 0;
  int aug_obs_dim = 0;  // base + pending-action slots
  ActionSpec spec;

  int act_dim() const { return spec.dim(); }
};

inline std::vector<AgentIo> agent_io(const DelayedEnv& env) {
  std::vector<AgentIo> io(env.num_agents());
  for (int i = 0; i < env.num_agents(); ++i) {
    io[i].base_obs_dim = env.base_obs_dim(i);
    io[i].aug_obs_dim = env.augmented_obs_dim(i);
    io[i].spec = env.action_spec(i);
  }
  return io;
}

struct LearnerConfig {
  Variant variant = Variant::Dama;
  int hidden = 128;        // two hidden layers of this width, ReLU
  double lr = 0.01;        // Adam, both actor and critic
  double gamma = 0.99;     // discount
  double kappa = 0.01;     // target-network soft-update rate
  double tau = 1.0;        // relaxed-categorical temperature
  double grad_clip = 0.5;  // global-norm clip per update

  void validate() const {
    if (hidden <= 0) throw ConfigError("learner: hidden width must be positive");
    if (lr <= 0.0) throw ConfigError("learner: lr must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("learner: gamma must be in [0, 1]");
    if (kappa < 0.0 || kappa > 1.0) throw ConfigError("learner: kappa must be in [0, 1]");
    if (tau <= 0.0) throw ConfigError("learner: tau must be positive");
    if (grad_clip <= 0.0) throw ConfigError("learner: grad_clip must be positive");
  }
};

// All agents' actors, critics, and their target copies, plus the update
// rules.  Everything trains off the replay buffer's augmented observations;
// delay-unaware variants slice the base-observation prefix off at batch
// time, so a zero-delay run is input-identical across the awareness axis.
class MultiAgentLearner {
 public:
  MultiAgentLearner(std::vector<AgentIo> io, LearnerConfig cfg,
                    std::uint64_t master_seed)
      : io_(std::move(io)), cfg_(cfg) {
    cfg_.validate();
    if (io_.empty()) throw ConfigError("learner: need at least one agent");
    const std::uint64_t root = sub_seed(master_seed, Stream::ParamInit);
    for (std::size_t i = 0; i < io_.size(); ++i) {
      const AgentIo& a = io_[i];
      if (a.act_dim() <= 0)
        throw ConfigError("learner: agent " + std::to_string(i) + " has no actions");
      actors_.emplace_back(
          std::vector<int>{policy_obs_dim(static_cast<int>(i)), cfg_.hidden,
                           cfg_.hidden, a.act_dim()},
          Activation::Relu, Activation::Identity, sub_seed(root, 2 * i));
      critics_.emplace_back(
          std::vector<int>{critic_input_dim(static_cast<int>(i)), cfg_.hidden,
                           cfg_.hidden, 1},
          Activation::Relu, Activation::Identity, sub_seed(root, 2 * i + 1));
    }
    actor_targets_ = actors_;
    critic_targets_ = critics_;
    actor_opts_.assign(io_.size(), OptimizerState::adam(cfg_.lr));
    critic_opts_.assign(io_.size(), OptimizerState::adam(cfg_.lr));
  }

  int num_agents() const { return static_cast<int>(io_.size()); }
  const LearnerConfig& config() const { return cfg_; }
  const AgentIo& io(int i) const { return io_[i]; }

  int policy_obs_dim(int i) const {
    return is_delay_aware(cfg_.variant) ? io_[i].aug_obs_dim : io_[i].base_obs_dim;
  }

  int critic_input_dim(int i) const {
    if (!is_centralized(cfg_.variant))
      return policy_obs_dim(i) + io_[i].act_dim();
    int total = 0;
    for (int j = 0; j < num_agents(); ++j)
      total += policy_obs_dim(j) + io_[j].act_dim();
    return total;
  }

  // -- policy evaluation ----------------------------------------------------

  // Exploration action: tanh-squashed movement plus clamped Gaussian noise;
  // message channels draw a straight-through relaxed-categorical sample.
  Eigen::VectorXd act(int i, const Eigen::VectorXd& aug_obs, double noise_scale,
                      Rng& noise_rng, Rng& gumbel_rng) const {
    Eigen::VectorXd raw = actors_[i].forward(policy_view(i, aug_obs));
    const ActionSpec& spec = io_[i].spec;
    Eigen::VectorXd a(spec.dim());
    for (int m = 0; m < spec.move_dim; ++m) {
      double v = std::tanh(raw(m)) * spec.move_bound;
      if (noise_scale > 0.0) v += noise_rng.normal(0.0, noise_scale * spec.move_bound);
      a(m) = std::clamp(v, -spec.move_bound, spec.move_bound);
    }
    if (spec.msg_dim > 0)
      a.tail(spec.msg_dim) = gumbel_softmax_straight_through(
          raw.tail(spec.msg_dim), cfg_.tau, gumbel_rng);
    return a;
  }

  // Noise-free action for evaluation: tanh movement, argmax message.
  Eigen::VectorXd act_greedy(int i, const Eigen::VectorXd& aug_obs) const {
    return greedy_head(i, actors_[i].forward(policy_view(i, aug_obs)));
  }

  // -- updates ---------------------------------------------------------------

  struct Batch {
    std::vector<Eigen::MatrixXd> obs;       // per agent: aug_obs_dim x B
    std::vector<Eigen::MatrixXd> actions;   // per agent: act_dim x B
    std::vector<Eigen::VectorXd> rewards;   // per agent: B
    std::vector<Eigen::MatrixXd> next_obs;  // per agent: aug_obs_dim x B
    Eigen::VectorXd done;                   // B entries in {0, 1}

    int size() const { return static_cast<int>(done.size()); }
  };

  static Batch make_batch(const std::vector<const Transition*>& sample) {
    if (sample.empty()) throw ConfigError("make_batch: empty sample");
    const int n = static_cast<int>(sample[0]->obs.size());
    const int B = static_cast<int>(sample.size());
    Batch b;
    b.obs.resize(n);
    b.actions.resize(n);
    b.rewards.resize(n);
    b.next_obs.resize(n);
    b.done.resize(B);
    for (int i = 0; i < n; ++i) {
      b.obs[i].resize(sample[0]->obs[i].size(), B);
      b.actions[i].resize(sample[0]->actions[i].size(), B);
      b.rewards[i].resize(B);
      b.next_obs[i].resize(sample[0]->next_obs[i].size(), B);
    }
    for (int c = 0; c < B; ++c) {
      const Transition& t = *sample[c];
      for (int i = 0; i < n; ++i) {
        b.obs[i].col(c) = t.obs[i];
        b.actions[i].col(c) = t.actions[i];
        b.rewards[i](c) = t.rewards[i];
        b.next_obs[i].col(c) = t.next_obs[i];
      }
      b.done(c) = t.done ? 1.0 : 0.0;
    }
    return b;
  }

  // TD(0) regression of agent i's critic toward r + gamma * (1 - done) * Q',
  // where the target Q' evaluates the target actors greedily (deterministic
  // targets; exploration randomness lives only in the behavior policy).
  // Returns the mean squared TD error before the step.
  double critic_update(int i, const Batch& b) {
    auto [loss, grads] = critic_loss_and_grads(i, b);
    clip_global_norm(grads, cfg_.grad_clip);
    optimizer_step(critics_[i], grads, critic_opts_[i]);
    return loss;
  }

  // One ascent step on J = mean Q_i(x, a) with agent i's replay action
  // replaced by its current policy output (straight-through for message
  // channels).  Returns J before the step.
  double actor_update(int i, const Batch& b, Rng& gumbel_rng) {
    auto [objective, grads] = actor_objective_and_grads(i, b, gumbel_rng);
    clip_global_norm(grads, cfg_.grad_clip);
    optimizer_step(actors_[i], grads, actor_opts_[i]);
    return objective;
  }

  void soft_update_targets() {
    for (int i = 0; i < num_agents(); ++i) {
      soft_update(actor_targets_[i], actors_[i], cfg_.kappa);
      soft_update(critic_targets_[i], critics_[i], cfg_.kappa);
    }
  }

  // Loss and gradients without applying an update (also used by the
  // finite-difference checks in the test-suite).  Both functions return
  // gradients of the quantity optimizer_step *minimizes*; for the actor that
  // is -J, while the reported scalar is J itself.
  std::pair<double, GradientSet> critic_loss_and_grads(int i, const Batch& b) const {
    const int B = b.size();
    // target actions from the target actors, greedy heads
    std::vector<Eigen::MatrixXd> next_actions(num_agents());
    for (int j : critic_agents(i))
      next_actions[j] = greedy_head_batch(
          j, actor_targets_[j].forward_batch(policy_view_batch(j, b.next_obs[j])));
    Eigen::MatrixXd xn = assemble_critic_input(i, b.next_obs, next_actions);
    Eigen::MatrixXd qn = critic_targets_[i].forward_batch(xn);  // 1 x B
    Eigen::VectorXd y(B);
    for (int c = 0; c < B; ++c)
      y(c) = b.rewards[i](c) + cfg_.gamma * (1.0 - b.done(c)) * qn(0, c);

    Eigen::MatrixXd x = assemble_critic_input(i, b.obs, b.actions);
    Mlp::Cache cache;
    Eigen::MatrixXd q = critics_[i].forward_batch(x, &cache);
    Eigen::MatrixXd resid = q - y.transpose();
    const double loss = resid.squaredNorm() / B;
    Eigen::MatrixXd delta = resid * (2.0 / B);
    return {loss, critics_[i].backward_batch(cache, delta)};
  }

  std::pair<double, GradientSet> actor_objective_and_grads(int i, const Batch& b,
                                                           Rng& gumbel_rng) const {
    const int B = b.size();
    const ActionSpec& spec = io_[i].spec;
    Mlp::Cache actor_cache;
    Eigen::MatrixXd raw =
        actors_[i].forward_batch(policy_view_batch(i, b.obs[i]), &actor_cache);

    // compose agent i's action; keep the head intermediates for the chain rule
    Eigen::MatrixXd composed(spec.dim(), B);
    Eigen::MatrixXd tanh_move;  // move_dim x B
    Eigen::MatrixXd soft_msg;   // msg_dim x B
    if (spec.move_dim > 0) {
      tanh_move = raw.topRows(spec.move_dim).array().tanh();
      composed.topRows(spec.move_dim) = tanh_move * spec.move_bound;
    }
    if (spec.msg_dim > 0) {
      soft_msg.resize(spec.msg_dim, B);
      for (int c = 0; c < B; ++c) {
        Eigen::VectorXd soft;
        composed.col(c).tail(spec.msg_dim) = gumbel_softmax_straight_through(
            raw.col(c).tail(spec.msg_dim), cfg_.tau, gumbel_rng, &soft);
        soft_msg.col(c) = soft;
      }
    }

    std::vector<Eigen::MatrixXd> actions = b.actions;
    actions[i] = composed;
    Eigen::MatrixXd x = assemble_critic_input(i, b.obs, actions);
    Mlp::Cache critic_cache;
    Eigen::MatrixXd q = critics_[i].forward_batch(x, &critic_cache);
    const double objective = q.mean();

    // dJ/da_i through the frozen critic (J maximized, so loss = -J)
    Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, B, -1.0 / B);
    Eigen::MatrixXd input_grad;
    critics_[i].backward_batch(critic_cache, dq, &input_grad);
    Eigen::MatrixXd da =
        input_grad.middleRows(action_row_offset(i), spec.dim());

    // chain through the heads back to the raw actor outputs
    Eigen::MatrixXd delta_raw(spec.dim(), B);
    if (spec.move_dim > 0)
      delta_raw.topRows(spec.move_dim) =
          da.topRows(spec.move_dim).array() *
          (1.0 - tanh_move.array().square()) * spec.move_bound;
    if (spec.msg_dim > 0)
      for (int c = 0; c < B; ++c)
        delta_raw.col(c).tail(spec.msg_dim) = gumbel_softmax_backward(
            soft_msg.col(c), da.col(c).tail(spec.msg_dim), cfg_.tau);

    return {objective, actors_[i].backward_batch(actor_cache, delta_raw)};
  }

  // -- net access (checkpointing, tests) ------------------------------------

  Mlp& actor(int i) { return actors_[i]; }
  Mlp& critic(int i) { return critics_[i]; }
  Mlp& actor_target(int i) { return actor_targets_[i]; }
  Mlp& critic_target(int i) { return critic_targets_[i]; }
  const Mlp& actor(int i) const { return actors_[i]; }
  const Mlp& critic(int i) const { return critics_[i]; }
  const Mlp& actor_target(int i) const { return actor_targets_[i]; }
  const Mlp& critic_target(int i) const { return critic_targets_[i]; }

  // Observation part the policy actually sees (prefix for unaware variants).
  Eigen::VectorXd policy_view(int i, const Eigen::VectorXd& aug) const {
    if (aug.size() != io_[i].aug_obs_dim)
      throw ShapeError("policy_view: augmented obs dim mismatch for agent " +
                       std::to_string(i));
    return aug.head(policy_obs_dim(i));
  }

  Eigen::MatrixXd policy_view_batch(int i, const Eigen::MatrixXd& aug) const {
    if (aug.rows() != io_[i].aug_obs_dim)
      throw ShapeError("policy_view_batch: augmented obs dim mismatch for agent " +
                       std::to_string(i));
    return aug.topRows(policy_obs_dim(i));
  }

 private:
  // agents whose observations/actions feed agent i's critic
  std::vector<int> critic_agents(int i) const {
    if (!is_centralized(cfg_.variant)) return {i};
    std::vector<int> all(num_agents());
    for (int j = 0; j < num_agents(); ++j) all[j] = j;
    return all;
  }

  int action_row_offset(int i) const {
    int offset = 0;
    for (int j : critic_agents(i)) offset += policy_obs_dim(j);
    for (int j : critic_agents(i)) {
      if (j == i) break;
      offset += io_[j].act_dim();
    }
    return offset;
  }

  Eigen::MatrixXd assemble_critic_input(
      int i, const std::vector<Eigen::MatrixXd>& aug_obs,
      const std::vector<Eigen::MatrixXd>& actions) const {
    const auto agents = critic_agents(i);
    const int B = static_cast<int>(aug_obs[i].cols());
    Eigen::MatrixXd x(critic_input_dim(i), B);
    int at = 0;
    for (int j : agents) {
      x.middleRows(at, policy_obs_dim(j)) = policy_view_batch(j, aug_obs[j]);
      at += policy_obs_dim(j);
    }
    for (int j : agents) {
      if (actions[j].rows() != io_[j].act_dim())
        throw ShapeError("critic input: action dim mismatch for agent " +
                         std::to_string(j));
      x.middleRows(at, io_[j].act_dim()) = actions[j];
      at += io_[j].act_dim();
    }
    return x;
  }

  // deterministic action head: tanh-scaled movement, argmax message
  Eigen::VectorXd greedy_head(int i, const Eigen::VectorXd& raw) const {
    const ActionSpec& spec = io_[i].spec;
    Eigen::VectorXd a(spec.dim());
    for (int m = 0; m < spec.move_dim; ++m)
      a(m) = std::tanh(raw(m)) * spec.move_bound;
    if (spec.msg_dim > 0) {
      Eigen::VectorXd logits = raw.tail(spec.msg_dim);
      a.tail(spec.msg_dim) = one_hot(argmax(logits), spec.msg_dim);
    }
    return a;
  }

  Eigen::MatrixXd greedy_head_batch(int i, const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (int c = 0; c < raw.cols(); ++c) out.col(c) = greedy_head(i, raw.col(c));
    return out;
  }

  std::vector<AgentIo> io_;
  LearnerConfig cfg_;
  std::vector<Mlp> actors_, critics_, actor_targets_, critic_targets_;
  std::vector<OptimizerState> actor_opts_, critic_opts_;
};

}  // namespace damarl
