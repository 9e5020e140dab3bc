#pragma once

#include <deque>
#include <string>
#include <vector>

#include "damarl/common.hpp"
#include "damarl/tabular_game.hpp"

namespace damarl {

// Per-agent action delays for a tabular game: agent i's action takes effect
// k_i steps after it is chosen.  `initial_actions[i]` is the sequence of k_i
// actions that pre-fill agent i's buffer at episode start (the actions that
// will execute before the agent's first real choice lands).
struct DelaySpec {
  std::vector<int> steps;                        // k_i >= 0
  std::vector<std::vector<int>> initial_actions; // c_i, |c_i| == k_i

  static DelaySpec zeros(int num_agents) {
    DelaySpec d;
    d.steps.assign(num_agents, 0);
    d.initial_actions.assign(num_agents, {});
    return d;
  }

  static DelaySpec uniform(int num_agents, int k, int fill_action = 0) {
    DelaySpec d;
    d.steps.assign(num_agents, k);
    d.initial_actions.assign(num_agents, std::vector<int>(k, fill_action));
    return d;
  }

  void validate(const TabularMarkovGame& g) const {
    if (static_cast<int>(steps.size()) != g.num_agents ||
        static_cast<int>(initial_actions.size()) != g.num_agents)
      throw ConfigError("delay spec must have one entry per agent");
    for (int i = 0; i < g.num_agents; ++i) {
      if (steps[i] < 0)
        throw ConfigError("delay steps must be non-negative (agent " +
                          std::to_string(i) + ")");
      if (static_cast<int>(initial_actions[i].size()) != steps[i])
        throw ConfigError("initial action sequence for agent " + std::to_string(i) +
                          " must have length " + std::to_string(steps[i]));
      for (int a : initial_actions[i])
        if (a < 0 || a >= g.num_actions[i])
          throw ConfigError("initial action out of range for agent " +
                            std::to_string(i));
    }
  }
};

// FIFO buffers holding each agent's chosen-but-not-yet-executed actions.
// With delay k_i the buffer holds exactly k_i entries between steps: the
// front entry executes this step, the action chosen now joins the back and
// executes k_i steps later.  k_i == 0 passes the chosen action straight
// through.  The action type is generic: tabular games use int, continuous
// control uses a vector-valued action.
template <typename Action>
class ActionBuffer {
 public:
  ActionBuffer() = default;

  ActionBuffer(std::vector<int> delay_steps, std::vector<std::vector<Action>> initial) {
    if (delay_steps.size() != initial.size())
      throw ConfigError("action buffer: one initial sequence per agent required");
    k_ = std::move(delay_steps);
    queues_.resize(k_.size());
    for (std::size_t i = 0; i < k_.size(); ++i) {
      if (k_[i] < 0) throw ConfigError("action buffer: negative delay");
      if (static_cast<int>(initial[i].size()) != k_[i])
        throw ConfigError("action buffer: initial sequence for agent " +
                          std::to_string(i) + " must have length " +
                          std::to_string(k_[i]));
      for (auto& a : initial[i]) queues_[i].push_back(std::move(a));
    }
  }

  int num_agents() const { return static_cast<int>(k_.size()); }
  int delay(int agent) const { return k_[agent]; }

  // Oldest-first view of agent i's pending actions (length k_i).
  std::vector<Action> pending(int agent) const {
    return {queues_[agent].begin(), queues_[agent].end()};
  }

  // Advances one step: returns the actions that execute now and enqueues the
  // freshly chosen ones.  For a zero-delay agent the chosen action executes
  // immediately.
  std::vector<Action> step(const std::vector<Action>& chosen) {
    if (static_cast<int>(chosen.size()) != num_agents())
      throw ShapeError("action buffer: chosen action count mismatch");
    std::vector<Action> executed;
    executed.reserve(chosen.size());
    for (std::size_t i = 0; i < queues_.size(); ++i) {
      if (k_[i] == 0) {
        executed.push_back(chosen[i]);
      } else {
        executed.push_back(queues_[i].front());
        queues_[i].pop_front();
        queues_[i].push_back(chosen[i]);
      }
    }
    return executed;
  }

 private:
  std::vector<int> k_;
  std::vector<std::deque<Action>> queues_;
};

inline ActionBuffer<int> make_buffer(const DelaySpec& d) {
  return ActionBuffer<int>(d.steps, d.initial_actions);
}

// Random delays (k_i <= kmax) with random initial sequences; for tests and
// the self-check command.
inline DelaySpec make_random_delays(Rng& rng, const TabularMarkovGame& g, int kmax) {
  DelaySpec d;
  d.steps.resize(g.num_agents);
  d.initial_actions.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    d.steps[i] = rng.uniform_int(kmax + 1);
    d.initial_actions[i].resize(d.steps[i]);
    for (int& a : d.initial_actions[i]) a = rng.uniform_int(g.num_actions[i]);
  }
  return d;
}

}  // namespace damarl
