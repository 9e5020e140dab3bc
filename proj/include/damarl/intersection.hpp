#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "damarl/env.hpp"

namespace damarl {

// Four-vehicle unsignalized intersection.  Each vehicle approaches the
// 20 m x 20 m junction box from one of the four compass directions and takes
// a left turn; control is longitudinal acceleration only, so a vehicle's
// state is its arc position p along a fixed route and its speed v:
//
//   v <- clamp(v + a * dt, 0, v_max),   p <- p + v * dt
//
// Route geometry (right-hand traffic, box spans [-10, 10]^2): a straight
// approach in the lane offset +2.5 m from the road center, a quarter-circle
// left-turn arc of radius 12.5 m connecting the approach lane to the proper
// exit lane on the crossing road, then a straight exit.  The radius follows
// from the lane offsets: the arc from (2.5, -10) to (-10, 2.5) centered at
// (-10, -10) is the unique circular connector, and this geometry gives the
// junction its signature conflict pattern — arcs of vehicles from
// *opposite* directions stay > 3 m apart (never conflict) while arcs of
// *adjacent* directions cross inside the box.  Routes 1..3 are the
// northbound template rotated by 90, 180, 270 degrees.
//
// Episodes end in exactly one of three outcomes: success (every vehicle has
// cleared the arc by 5 m), crash (any two vehicles within the 2 m collision
// radius), or stuck (time limit reached first).  Rewards: success_reward to
// all on success, -crash_penalty to all on crash, -step_penalty to each
// vehicle every tick.
//
// Spawn: arc distance to the box drawn per vehicle from Normal(50 m, 10 m)
// (clamped to >= 12 m so the approach exists); initial speed exactly 10 m/s.
//
// Observation (dim 8): own (p - approach_length) / 50 and v / 10 first, then
// the same pair for the other vehicles in index order.
class IntersectionEnv : public Env {
 public:
  static constexpr double kHalfBox = 10.0;
  static constexpr double kLaneOffset = 2.5;
  static constexpr double kTurnRadius = 12.5;
  static constexpr double kCollisionRadius = 2.0;
  static constexpr double kMaxSpeed = 15.0;
  static constexpr double kMaxAccel = 3.0;
  static constexpr double kInitialSpeed = 10.0;
  static constexpr double kSpawnMean = 50.0;
  static constexpr double kSpawnStd = 10.0;
  static constexpr double kMinSpawn = 12.0;
  static constexpr double kClearMargin = 5.0;

  explicit IntersectionEnv(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    horizon_ = cfg_.resolved_episode_length();
  }

  int num_agents() const override { return 4; }
  std::string scenario() const override { return "intersection"; }
  int obs_dim(int) const override { return 8; }
  ActionSpec action_spec(int) const override {
    return {.move_dim = 1, .move_bound = 1.0, .msg_dim = 0};
  }
  int episode_length() const override { return horizon_; }

  std::vector<Eigen::VectorXd> reset(std::uint64_t seed) override {
    Rng rng(seed);
    tick_ = 0;
    outcome_ = Outcome::None;
    for (int i = 0; i < 4; ++i) {
      spawn_[i] = std::max(kMinSpawn, rng.normal(kSpawnMean, kSpawnStd));
      p_[i] = 0.0;
      v_[i] = kInitialSpeed;
    }
    std::vector<Eigen::VectorXd> obs;
    for (int i = 0; i < 4; ++i) obs.push_back(observe(i));
    return obs;
  }

  StepResult step(const std::vector<Eigen::VectorXd>& actions) override {
    if (static_cast<int>(actions.size()) != 4)
      throw ShapeError("intersection: expected 4 actions");
    for (int i = 0; i < 4; ++i) {
      if (actions[i].size() != 1)
        throw ShapeError("intersection: actions are scalar accelerations");
      if (!actions[i].allFinite())
        throw NumericError("intersection: non-finite action for vehicle " +
                           std::to_string(i));
    }
    if (outcome_ != Outcome::None)
      throw NotReadyError("intersection: episode already ended; call reset");

    for (int i = 0; i < 4; ++i) {
      const double a = std::clamp(actions[i](0), -1.0, 1.0) * kMaxAccel;
      v_[i] = std::clamp(v_[i] + a * cfg_.dt, 0.0, kMaxSpeed);
      p_[i] += v_[i] * cfg_.dt;
    }
    ++tick_;

    StepResult r;
    r.rewards.assign(4, -cfg_.step_penalty);

    bool crash = false;
    for (int i = 0; i < 4 && !crash; ++i)
      for (int j = i + 1; j < 4; ++j)
        if ((position(i) - position(j)).norm() < kCollisionRadius) {
          crash = true;
          ++r.info.collisions;
          break;
        }
    bool all_clear = true;
    for (int i = 0; i < 4; ++i)
      if (p_[i] < clear_position(i)) all_clear = false;

    if (crash) {
      outcome_ = Outcome::Crash;
      for (double& rew : r.rewards) rew -= cfg_.crash_penalty;
    } else if (all_clear) {
      outcome_ = Outcome::Success;
      for (double& rew : r.rewards) rew += cfg_.success_reward;
    } else if (tick_ >= horizon_) {
      outcome_ = Outcome::Stuck;
    }
    r.done = outcome_ != Outcome::None;
    r.info.outcome = outcome_;
    r.obs.resize(4);
    for (int i = 0; i < 4; ++i) r.obs[i] = observe(i);
    return r;
  }

  // 2-D position of vehicle i on its route at the current arc position.
  Vec2 position(int i) const { return route_point(i, p_[i]); }

  double approach_length(int i) const { return spawn_[i] - kHalfBox; }
  static double arc_length() { return kTurnRadius * 3.14159265358979323846 / 2.0; }
  double clear_position(int i) const {
    return approach_length(i) + arc_length() + kClearMargin;
  }
  double arc_position(int i) const { return p_[i]; }
  double speed(int i) const { return v_[i]; }
  double spawn_distance(int i) const { return spawn_[i]; }
  Outcome outcome() const { return outcome_; }

  nlohmann::json state_json() const override {
    nlohmann::json vehicles = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) {
      Vec2 xy = position(i);
      vehicles.push_back(
          {{"p", p_[i]}, {"v", v_[i]}, {"pos", {xy.x, xy.y}}, {"spawn", spawn_[i]}});
    }
    return {{"tick", tick_}, {"outcome", to_string(outcome_)}, {"vehicles", vehicles}};
  }

  // Scripted-fixture hook: pin the spawn distances (and restart the episode
  // with them) instead of sampling.
  void set_spawn_distances(const std::vector<double>& d) {
    if (d.size() != 4) throw ConfigError("intersection: need 4 spawn distances");
    for (double di : d)
      if (di < kMinSpawn)
        throw ConfigError("intersection: spawn distance below minimum");
    tick_ = 0;
    outcome_ = Outcome::None;
    for (int i = 0; i < 4; ++i) {
      spawn_[i] = d[i];
      p_[i] = 0.0;
      v_[i] = kInitialSpeed;
    }
  }

  // Exposed for geometry tests: point on route i at arc position p.
  Vec2 route_point(int i, double p) const {
    const double approach = approach_length(i);
    Vec2 pt;
    if (p < approach) {
      pt = {kLaneOffset, -spawn_[i] + p};
    } else if (p < approach + arc_length()) {
      const double theta = (p - approach) / kTurnRadius;
      pt = {-kHalfBox + kTurnRadius * std::cos(theta),
            -kHalfBox + kTurnRadius * std::sin(theta)};
    } else {
      const double e = p - approach - arc_length();
      pt = {-kHalfBox - e, kLaneOffset};
    }
    for (int r = 0; r < i; ++r) pt = {-pt.y, pt.x};  // rotate 90 degrees per route
    return pt;
  }

 private:
  Eigen::VectorXd observe(int agent) const {
    Eigen::VectorXd o(8);
    int at = 0;
    auto push = [&](int i) {
      o(at++) = (p_[i] - approach_length(i)) / 50.0;
      o(at++) = v_[i] / 10.0;
    };
    push(agent);
    for (int i = 0; i < 4; ++i)
      if (i != agent) push(i);
    return o;
  }

  ScenarioConfig cfg_;
  int horizon_ = 100;
  int tick_ = 0;
  double spawn_[4] = {0, 0, 0, 0};
  double p_[4] = {0, 0, 0, 0};
  double v_[4] = {0, 0, 0, 0};
  Outcome outcome_ = Outcome::None;
};

}  // namespace damarl
