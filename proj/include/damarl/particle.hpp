#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "damarl/env.hpp"

namespace damarl {

// 2-D point-mass world.  Movable entities integrate
//
//   v <- v * (1 - damping) + (F / m) * dt,   clamped to max_speed
//   p <- p + v * dt
//
// per tick (unit mass, damping 0.25).  Applied forces are the agents' action
// vectors times their acceleration gain, plus soft contact forces between
// colliding entities: stiffness 100 times a softplus of the overlap with
// margin 0.001, directed along the center line.  Hard overlap (distance below
// summed radii) is the collision *event* used by rewards, independent of the
// soft force model.
struct Entity {
  Vec2 pos;
  Vec2 vel;
  double radius = 0.05;
  bool movable = false;
  bool collide = true;
  double max_speed = -1.0;  // < 0: unlimited
  double accel = 1.0;       // force gain on the action vector
};

class ParticleWorld {
 public:
  double dt = 0.1;
  double damping = 0.25;
  double contact_stiffness = 100.0;
  double contact_margin = 0.001;
  std::vector<Entity> entities;

  // Advances one tick under per-entity applied forces (empty vector = no
  // applied force).  Returns the list of hard-colliding entity index pairs.
  std::vector<std::pair<int, int>> step(const std::vector<Vec2>& applied) {
    const int n = static_cast<int>(entities.size());
    std::vector<Vec2> force(n);
    for (int i = 0; i < n && i < static_cast<int>(applied.size()); ++i)
      force[i] = applied[i] * entities[i].accel;

    std::vector<std::pair<int, int>> events;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const Entity& ea = entities[a];
        const Entity& eb = entities[b];
        if (!ea.collide || !eb.collide) continue;
        if (!ea.movable && !eb.movable) continue;
        Vec2 delta = ea.pos - eb.pos;
        double dist = delta.norm();
        const double dist_min = ea.radius + eb.radius;
        if (dist < dist_min) events.emplace_back(a, b);
        Vec2 dir = dist > 1e-9 ? delta * (1.0 / dist) : Vec2{1.0, 0.0};
        // softplus of the overlap, computed in the overflow-safe form
        // softplus(z) = max(z, 0) + log1p(exp(-|z|))
        const double z = -(dist - dist_min) / contact_margin;
        const double pen =
            (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)))) *
            contact_margin;
        Vec2 f = dir * (contact_stiffness * pen);
        if (ea.movable) force[a] += f;
        if (eb.movable) force[b] += f * -1.0;
      }
    }

    for (int i = 0; i < n; ++i) {
      Entity& e = entities[i];
      if (!e.movable) continue;
      e.vel = e.vel * (1.0 - damping) + force[i] * dt;  // unit mass
      if (e.max_speed > 0.0) {
        double speed = e.vel.norm();
        if (speed > e.max_speed) e.vel = e.vel * (e.max_speed / speed);
      }
      e.pos += e.vel * dt;
    }
    return events;
  }
};

// Shared plumbing for the particle scenarios: world construction, action
// validation/clamping, per-tick bookkeeping.
class ParticleEnv : public Env {
 public:
  explicit ParticleEnv(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    world_.dt = cfg_.dt;
    horizon_ = cfg_.resolved_episode_length();
  }

  int episode_length() const override { return horizon_; }

  StepResult step(const std::vector<Eigen::VectorXd>& actions) override {
    if (static_cast<int>(actions.size()) != num_agents())
      throw ShapeError(scenario() + ": expected " + std::to_string(num_agents()) +
                       " actions, got " + std::to_string(actions.size()));
    std::vector<Vec2> forces(world_.entities.size());
    for (int i = 0; i < num_agents(); ++i) {
      const ActionSpec spec = action_spec(i);
      if (actions[i].size() != spec.dim())
        throw ShapeError(scenario() + ": action dim mismatch for agent " +
                         std::to_string(i));
      if (!actions[i].allFinite())
        throw NumericError(scenario() + ": non-finite action for agent " +
                           std::to_string(i));
      if (spec.move_dim == 2) {
        forces[entity_of_agent(i)] = {
            std::clamp(actions[i](0), -spec.move_bound, spec.move_bound),
            std::clamp(actions[i](1), -spec.move_bound, spec.move_bound)};
      }
    }
    apply_scripted_forces(forces);
    apply_messages(actions);
    auto events = world_.step(forces);

    ++tick_;
    StepResult r;
    r.done = tick_ >= horizon_;
    fill_rewards_and_info(events, r);
    r.obs.resize(num_agents());
    for (int i = 0; i < num_agents(); ++i) r.obs[i] = observe(i);
    return r;
  }

  nlohmann::json state_json() const override {
    nlohmann::json ents = nlohmann::json::array();
    for (const Entity& e : world_.entities)
      ents.push_back({{"pos", {e.pos.x, e.pos.y}}, {"vel", {e.vel.x, e.vel.y}}});
    return {{"tick", tick_}, {"entities", ents}};
  }

  // Direct world access for scripted fixtures (placing entities by hand).
  ParticleWorld& world() { return world_; }
  const ParticleWorld& world() const { return world_; }

 protected:
  // index into world_.entities of learning agent i
  virtual int entity_of_agent(int agent) const { return agent; }
  virtual Eigen::VectorXd observe(int agent) const = 0;
  virtual void fill_rewards_and_info(const std::vector<std::pair<int, int>>& events,
                                     StepResult& r) const = 0;
  virtual void apply_scripted_forces(std::vector<Vec2>&) {}
  virtual void apply_messages(const std::vector<Eigen::VectorXd>&) {}

  static void put(Eigen::VectorXd& v, int& at, const Vec2& p) {
    v(at++) = p.x;
    v(at++) = p.y;
  }

  ScenarioConfig cfg_;
  ParticleWorld world_;
  int horizon_ = 25;
  int tick_ = 0;
};

// Speaker-listener world: three fixed landmarks of distinct colors, a
// stationary speaker that sees which landmark is the goal and emits a
// three-symbol message, and a mobile listener that sees the landmarks and the
// message but not the goal.  Both agents share the reward
// -|listener - goal|^2, so the speaker can only earn it by communicating.
//
// Observation layouts:
//   speaker  (dim 3):  goal color one-hot
//   listener (dim 13): own vel (2), own pos (2), landmark offsets (3 x 2),
//                      message received this tick (3)
class CoopCommEnv : public ParticleEnv {
 public:
  explicit CoopCommEnv(const ScenarioConfig& cfg) : ParticleEnv(cfg) {
    world_.entities.resize(5);
    // 0: speaker (fixed), 1: listener, 2-4: landmarks
    world_.entities[0].movable = false;
    world_.entities[0].collide = false;
    world_.entities[0].radius = 0.075;
    world_.entities[1].movable = true;
    world_.entities[1].collide = false;
    world_.entities[1].radius = 0.075;
    for (int l = 2; l < 5; ++l) {
      world_.entities[l].movable = false;
      world_.entities[l].collide = false;
      world_.entities[l].radius = 0.04;
    }
  }

  int num_agents() const override { return 2; }
  std::string scenario() const override { return "coop_comm"; }
  int obs_dim(int agent) const override { return agent == 0 ? 3 : 13; }
  ActionSpec action_spec(int agent) const override {
    if (agent == 0) return {.move_dim = 0, .move_bound = 1.0, .msg_dim = 3};
    return {.move_dim = 2, .move_bound = 1.0, .msg_dim = 0};
  }

  std::vector<Eigen::VectorXd> reset(std::uint64_t seed) override {
    Rng rng(seed);
    tick_ = 0;
    for (int i = 0; i < 2; ++i) {
      world_.entities[i].pos = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      world_.entities[i].vel = {0.0, 0.0};
    }
    for (int l = 2; l < 5; ++l)
      world_.entities[l].pos = {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
    goal_ = rng.uniform_int(3);
    message_.setZero();
    return {observe(0), observe(1)};
  }

  int goal_landmark() const { return goal_; }
  const Vec2& listener_pos() const { return world_.entities[1].pos; }
  Vec2 goal_pos() const { return world_.entities[2 + goal_].pos; }

 protected:
  int entity_of_agent(int agent) const override { return agent; }

  void apply_messages(const std::vector<Eigen::VectorXd>& actions) override {
    message_ = actions[0];  // speaker's executed (possibly delayed) symbols
  }

  Eigen::VectorXd observe(int agent) const override {
    if (agent == 0) {
      Eigen::VectorXd o = Eigen::VectorXd::Zero(3);
      o(goal_) = 1.0;
      return o;
    }
    const Entity& me = world_.entities[1];
    Eigen::VectorXd o(13);
    int at = 0;
    put(o, at, me.vel);
    put(o, at, me.pos);
    for (int l = 2; l < 5; ++l) put(o, at, world_.entities[l].pos - me.pos);
    o.segment(at, 3) = message_;
    return o;
  }

  void fill_rewards_and_info(const std::vector<std::pair<int, int>>&,
                             StepResult& r) const override {
    const double d2 = (listener_pos() - goal_pos()).squared_norm();
    r.rewards = {-d2, -d2};  // shared
  }

 private:
  int goal_ = 0;
  Eigen::Vector3d message_ = Eigen::Vector3d::Zero();
};

// Cooperative navigation: three identical agents must spread out to cover
// three landmarks.  Shared reward is minus the sum over landmarks of the
// distance to the nearest agent; each colliding agent additionally receives
// -1 per collision event it is part of.
//
// Observation layout (dim 18): own vel (2), own pos (2), landmark offsets
// (3 x 2), other agents' offsets (2 x 2), other agents' velocities (2 x 2).
class CoopNavEnv : public ParticleEnv {
 public:
  explicit CoopNavEnv(const ScenarioConfig& cfg) : ParticleEnv(cfg) {
    world_.entities.resize(6);
    for (int i = 0; i < 3; ++i) {
      world_.entities[i].movable = true;
      world_.entities[i].collide = true;
      world_.entities[i].radius = 0.15;
    }
    for (int l = 3; l < 6; ++l) {
      world_.entities[l].movable = false;
      world_.entities[l].collide = false;
      world_.entities[l].radius = 0.05;
    }
  }

  int num_agents() const override { return 3; }
  std::string scenario() const override { return "coop_nav"; }
  int obs_dim(int) const override { return 18; }
  ActionSpec action_spec(int) const override {
    return {.move_dim = 2, .move_bound = 1.0, .msg_dim = 0};
  }

  std::vector<Eigen::VectorXd> reset(std::uint64_t seed) override {
    Rng rng(seed);
    tick_ = 0;
    for (int i = 0; i < 3; ++i) {
      world_.entities[i].pos = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      world_.entities[i].vel = {0.0, 0.0};
    }
    for (int l = 3; l < 6; ++l)
      world_.entities[l].pos = {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
    std::vector<Eigen::VectorXd> obs;
    for (int i = 0; i < 3; ++i) obs.push_back(observe(i));
    return obs;
  }

 protected:
  Eigen::VectorXd observe(int agent) const override {
    const Entity& me = world_.entities[agent];
    Eigen::VectorXd o(18);
    int at = 0;
    put(o, at, me.vel);
    put(o, at, me.pos);
    for (int l = 3; l < 6; ++l) put(o, at, world_.entities[l].pos - me.pos);
    for (int j = 0; j < 3; ++j)
      if (j != agent) put(o, at, world_.entities[j].pos - me.pos);
    for (int j = 0; j < 3; ++j)
      if (j != agent) put(o, at, world_.entities[j].vel);
    return o;
  }

  void fill_rewards_and_info(const std::vector<std::pair<int, int>>& events,
                             StepResult& r) const override {
    double shared = 0.0;
    for (int l = 3; l < 6; ++l) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i)
        best = std::min(best, (world_.entities[l].pos - world_.entities[i].pos).norm());
      shared -= best;
    }
    r.rewards.assign(3, shared);
    for (const auto& [a, b] : events) {
      r.rewards[a] -= 1.0;
      r.rewards[b] -= 1.0;
      ++r.info.collisions;
    }
  }
};

// Predator-prey: three slower predators chase one faster prey around two
// large fixed obstacles.  Every predator-prey contact event ("touch") pays
// +touch_reward to every predator and -touch_reward to the prey; touches are
// also counted in StepInfo for evaluation tables.  The prey additionally
// pays a soft boundary penalty that keeps it from fleeing to infinity.
//
// With fixed_prey=true the prey is not a learning agent: it is driven by a
// script that accelerates away from the nearest predator (with a soft wall
// force), and only the three predators appear in the roster.
//
// Observation layout (dim 20, same for every agent): own vel (2), own pos
// (2), obstacle offsets (2 x 2), other agents' offsets (3 x 2), other
// agents' velocities (3 x 2).
class PredatorPreyEnv : public ParticleEnv {
 public:
  explicit PredatorPreyEnv(const ScenarioConfig& cfg) : ParticleEnv(cfg) {
    world_.entities.resize(6);
    // 0-2: predators, 3: prey, 4-5: obstacles
    for (int i = 0; i < 3; ++i) {
      world_.entities[i].movable = true;
      world_.entities[i].collide = true;
      world_.entities[i].radius = 0.075;
      world_.entities[i].accel = 3.0;
      world_.entities[i].max_speed = 1.0;
    }
    world_.entities[3].movable = true;
    world_.entities[3].collide = true;
    world_.entities[3].radius = 0.05;
    world_.entities[3].accel = 4.0;
    world_.entities[3].max_speed = 1.3;
    for (int l = 4; l < 6; ++l) {
      world_.entities[l].movable = false;
      world_.entities[l].collide = true;
      world_.entities[l].radius = 0.2;
    }
  }

  int num_agents() const override { return cfg_.fixed_prey ? 3 : 4; }
  std::string scenario() const override { return "predator_prey"; }
  int obs_dim(int) const override { return 20; }
  ActionSpec action_spec(int) const override {
    return {.move_dim = 2, .move_bound = 1.0, .msg_dim = 0};
  }

  std::vector<Eigen::VectorXd> reset(std::uint64_t seed) override {
    Rng rng(seed);
    tick_ = 0;
    for (int i = 0; i < 4; ++i) {
      world_.entities[i].pos = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      world_.entities[i].vel = {0.0, 0.0};
    }
    for (int l = 4; l < 6; ++l)
      world_.entities[l].pos = {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
    std::vector<Eigen::VectorXd> obs;
    for (int i = 0; i < num_agents(); ++i) obs.push_back(observe(i));
    return obs;
  }

 protected:
  void apply_scripted_forces(std::vector<Vec2>& forces) override {
    if (!cfg_.fixed_prey) return;
    const Vec2 prey = world_.entities[3].pos;
    double best = std::numeric_limits<double>::infinity();
    Vec2 away{1.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      Vec2 d = prey - world_.entities[i].pos;
      double dist = d.norm();
      if (dist < best) {
        best = dist;
        away = dist > 1e-9 ? d * (1.0 / dist) : Vec2{1.0, 0.0};
      }
    }
    // soft walls keep the scripted prey inside the arena
    Vec2 f = away;
    for (double Vec2::*axis : {&Vec2::x, &Vec2::y}) {
      const double v = prey.*axis;
      if (v > 1.0) f.*axis -= 3.0 * (v - 1.0);
      if (v < -1.0) f.*axis -= 3.0 * (v + 1.0);
    }
    forces[3] = f;
  }

  Eigen::VectorXd observe(int agent) const override {
    const Entity& me = world_.entities[agent];
    Eigen::VectorXd o(20);
    int at = 0;
    put(o, at, me.vel);
    put(o, at, me.pos);
    for (int l = 4; l < 6; ++l) put(o, at, world_.entities[l].pos - me.pos);
    for (int j = 0; j < 4; ++j)
      if (j != agent) put(o, at, world_.entities[j].pos - me.pos);
    for (int j = 0; j < 4; ++j)
      if (j != agent) put(o, at, world_.entities[j].vel);
    return o;
  }

  void fill_rewards_and_info(const std::vector<std::pair<int, int>>& events,
                             StepResult& r) const override {
    int touches = 0;
    for (const auto& [a, b] : events) {
      ++r.info.collisions;
      const bool prey_involved = (a == 3 || b == 3);
      const bool predator_involved = (a < 3 || b < 3);
      if (prey_involved && predator_involved) ++touches;
    }
    r.info.touches = touches;
    r.rewards.assign(num_agents(), 0.0);
    for (int i = 0; i < 3; ++i) r.rewards[i] = cfg_.touch_reward * touches;
    if (!cfg_.fixed_prey) {
      double prey_r = -cfg_.touch_reward * touches;
      const Vec2 p = world_.entities[3].pos;
      prey_r -= boundary_penalty(std::abs(p.x)) + boundary_penalty(std::abs(p.y));
      r.rewards[3] = prey_r;
    }
  }

 private:
  // smooth penalty that ramps up outside |coord| = 0.9 (keeps a learning
  // prey from drifting out of the arena; zero well inside)
  static double boundary_penalty(double x) {
    if (x < 0.9) return 0.0;
    if (x < 1.0) return (x - 0.9) * 10.0;
    return std::min(std::exp(2.0 * x - 2.0), 10.0);
  }
};

}  // namespace damarl
