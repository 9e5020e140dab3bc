#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "damarl/common.hpp"
#include "damarl/delay.hpp"

namespace damarl {

// Per-agent action layout: a bounded 2-D (or 1-D) movement/acceleration part
// followed by an optional block of discrete-message logits.  The executed
// message part is always a one-hot vector of length msg_dim.
struct ActionSpec {
  int move_dim = 0;
  double move_bound = 1.0;
  int msg_dim = 0;

  int dim() const { return move_dim + msg_dim; }
};

enum class Outcome { None, Success, Stuck, Crash };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::None: return "none";
    case Outcome::Success: return "success";
    case Outcome::Stuck: return "stuck";
    case Outcome::Crash: return "crash";
  }
  return "?";
}

struct StepInfo {
  int collisions = 0;  // collision events this step (all colliding pairs)
  int touches = 0;     // predator-prey contact events this step
  Outcome outcome = Outcome::None;
};

struct StepResult {
  std::vector<Eigen::VectorXd> obs;  // one per agent
  std::vector<double> rewards;       // one per agent
  bool done = false;
  StepInfo info;
};

// A finite-horizon multi-agent world behind a uniform stepping interface.
// reset(seed) must be bit-reproducible: the same seed always produces the
// same initial state, and identical action sequences then produce identical
// trajectories.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::vector<Eigen::VectorXd> reset(std::uint64_t seed) = 0;
  virtual StepResult step(const std::vector<Eigen::VectorXd>& actions) = 0;

  virtual int num_agents() const = 0;
  virtual int obs_dim(int agent) const = 0;
  virtual ActionSpec action_spec(int agent) const = 0;
  virtual int episode_length() const = 0;
  virtual std::string scenario() const = 0;

  // Snapshot of the physical state (positions, velocities, ...) for
  // trajectory dumps; layout documented per scenario.
  virtual nlohmann::json state_json() const = 0;
};

// Declarative scenario description, loadable from the run configuration.
struct ScenarioConfig {
  std::string scenario;      // coop_comm | coop_nav | predator_prey | intersection
  double dt = 0.1;           // seconds per tick
  int episode_length = 0;    // 0 = scenario default
  bool fixed_prey = false;   // predator_prey: scripted fleeing prey

  // reward magnitudes (signs and events are fixed by the scenarios)
  double touch_reward = 10.0;
  double success_reward = 10.0;
  double crash_penalty = 10.0;
  double step_penalty = 0.01;

  int resolved_episode_length() const {
    if (episode_length > 0) return episode_length;
    return scenario == "intersection" ? 100 : 25;
  }

  void validate() const {
    if (scenario != "coop_comm" && scenario != "coop_nav" &&
        scenario != "predator_prey" && scenario != "intersection")
      throw ConfigError("unknown scenario '" + scenario + "'");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (episode_length < 0) throw ConfigError("episode length must be positive");
    if (fixed_prey && scenario != "predator_prey")
      throw ConfigError("fixed_prey applies only to predator_prey");
  }
};

std::unique_ptr<Env> make_env(const ScenarioConfig& cfg);  // defined in scenarios.hpp

// Wraps an environment with per-agent action buffers: the continuous-control
// counterpart of the tabular game augmentation.  Chosen actions enter the
// buffers; what reaches the wrapped environment is each agent's k_i-step-old
// choice.  Observations come back augmented with the agent's own pending
// actions (oldest first), which is exactly the information a delay-aware
// policy may condition on.  Buffers start filled with zero actions.
class DelayedEnv {
 public:
  DelayedEnv(std::unique_ptr<Env> env, std::vector<int> delay_steps)
      : env_(std::move(env)), k_(std::move(delay_steps)) {
    if (static_cast<int>(k_.size()) != env_->num_agents())
      throw ConfigError("delay steps: need one entry per agent");
    for (int ki : k_)
      if (ki < 0) throw ConfigError("delay steps must be non-negative");
  }

  int num_agents() const { return env_->num_agents(); }
  int delay(int agent) const { return k_[agent]; }
  const Env& inner() const { return *env_; }

  int base_obs_dim(int agent) const { return env_->obs_dim(agent); }
  int act_part_dim(int agent) const {
    return k_[agent] * env_->action_spec(agent).dim();
  }
  int augmented_obs_dim(int agent) const {
    return base_obs_dim(agent) + act_part_dim(agent);
  }
  ActionSpec action_spec(int agent) const { return env_->action_spec(agent); }
  int episode_length() const { return env_->episode_length(); }

  std::vector<Eigen::VectorXd> reset(std::uint64_t seed) {
    std::vector<Eigen::VectorXd> base = env_->reset(seed);
    std::vector<std::vector<Eigen::VectorXd>> init(num_agents());
    for (int i = 0; i < num_agents(); ++i)
      init[i].assign(k_[i], Eigen::VectorXd::Zero(env_->action_spec(i).dim()));
    buffers_ = ActionBuffer<Eigen::VectorXd>(k_, init);
    last_base_obs_ = base;
    return augment(base);
  }

  StepResult step(const std::vector<Eigen::VectorXd>& chosen) {
    if (static_cast<int>(chosen.size()) != num_agents())
      throw ShapeError("delayed env: one action per agent required");
    for (int i = 0; i < num_agents(); ++i)
      if (chosen[i].size() != env_->action_spec(i).dim())
        throw ShapeError("delayed env: action dim mismatch for agent " +
                         std::to_string(i));
    last_executed_ = buffers_.step(chosen);
    StepResult r = env_->step(last_executed_);
    last_base_obs_ = r.obs;
    r.obs = augment(r.obs);
    return r;
  }

  // Agent i's pending actions flattened oldest-first: the o_act part of its
  // augmented observation, and the act-part slice stored in replay.
  Eigen::VectorXd act_part(int agent) const {
    const int ad = env_->action_spec(agent).dim();
    Eigen::VectorXd out(k_[agent] * ad);
    const auto pending = buffers_.pending(agent);
    for (int j = 0; j < k_[agent]; ++j) out.segment(j * ad, ad) = pending[j];
    return out;
  }

  const std::vector<Eigen::VectorXd>& last_executed() const { return last_executed_; }
  const std::vector<Eigen::VectorXd>& last_base_obs() const { return last_base_obs_; }
  const Env& env() const { return *env_; }
  Env& env() { return *env_; }

 private:
  std::vector<Eigen::VectorXd> augment(const std::vector<Eigen::VectorXd>& base) const {
    std::vector<Eigen::VectorXd> out(base.size());
    for (int i = 0; i < num_agents(); ++i) {
      Eigen::VectorXd aug(augmented_obs_dim(i));
      aug.head(base[i].size()) = base[i];
      aug.tail(act_part_dim(i)) = act_part(i);
      out[i] = aug;
    }
    return out;
  }

  std::unique_ptr<Env> env_;
  std::vector<int> k_;
  ActionBuffer<Eigen::VectorXd> buffers_;
  std::vector<Eigen::VectorXd> last_executed_;
  std::vector<Eigen::VectorXd> last_base_obs_;
};

}  // namespace damarl
