#pragma once

#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "damarl/common.hpp"

namespace damarl {

// Finite N-agent Markov game with per-agent deterministic observation maps
// and per-agent rewards that depend on the state and that agent's own action.
//
// Joint actions are indexed in mixed radix with agent 0 most significant:
//   idx = ((a_0 * |A_1| + a_1) * |A_2| + a_2) ...
// The same convention (leftmost component most significant) is used for every
// mixed-radix index in the library.
struct TabularMarkovGame {
  int num_agents = 0;
  int num_states = 0;
  std::vector<int> num_actions;       // |A_i|
  std::vector<int> num_observations;  // |O_i|
  std::vector<double> initial_dist;   // [s]
  std::vector<double> transition;     // [s][joint_a][s'] row-major
  // rewards[i][s * |A_i| + a_i]: agent i's reward for taking a_i in s.
  std::vector<std::vector<double>> rewards;
  // observation[i][s]: index of the observation agent i receives in s.
  std::vector<std::vector<int>> observation;

  std::int64_t joint_action_count() const {
    std::int64_t n = 1;
    for (int a : num_actions) n *= a;
    return n;
  }

  std::int64_t joint_action_index(const std::vector<int>& actions) const {
    std::int64_t idx = 0;
    for (int i = 0; i < num_agents; ++i) idx = idx * num_actions[i] + actions[i];
    return idx;
  }

  double prob(int s, std::int64_t joint_a, int s2) const {
    return transition[(static_cast<std::int64_t>(s) * joint_action_count() + joint_a) *
                          num_states +
                      s2];
  }

  double& prob(int s, std::int64_t joint_a, int s2) {
    return transition[(static_cast<std::int64_t>(s) * joint_action_count() + joint_a) *
                          num_states +
                      s2];
  }

  double reward(int agent, int s, int a) const {
    return rewards[agent][static_cast<std::size_t>(s) * num_actions[agent] + a];
  }

  double& reward(int agent, int s, int a) {
    return rewards[agent][static_cast<std::size_t>(s) * num_actions[agent] + a];
  }

  // Checks internal consistency: array sizes, distribution normalisation,
  // observation indices in range.  Throws ConfigError with the first problem.
  void validate(double tol = 1e-9) const {
    if (num_agents <= 0) throw ConfigError("game must have at least one agent");
    if (num_states <= 0) throw ConfigError("game must have at least one state");
    if (static_cast<int>(num_actions.size()) != num_agents ||
        static_cast<int>(num_observations.size()) != num_agents)
      throw ConfigError("per-agent size arrays must have num_agents entries");
    for (int i = 0; i < num_agents; ++i) {
      if (num_actions[i] <= 0) throw ConfigError("agent action count must be positive");
      if (num_observations[i] <= 0)
        throw ConfigError("agent observation count must be positive");
    }
    if (static_cast<int>(initial_dist.size()) != num_states)
      throw ConfigError("initial distribution must have num_states entries");
    double mass = std::accumulate(initial_dist.begin(), initial_dist.end(), 0.0);
    if (std::abs(mass - 1.0) > tol)
      throw ConfigError("initial distribution sums to " + std::to_string(mass));
    const std::int64_t ja = joint_action_count();
    if (static_cast<std::int64_t>(transition.size()) !=
        static_cast<std::int64_t>(num_states) * ja * num_states)
      throw ConfigError("transition tensor has wrong size");
    for (int s = 0; s < num_states; ++s) {
      for (std::int64_t a = 0; a < ja; ++a) {
        double row = 0.0;
        for (int s2 = 0; s2 < num_states; ++s2) {
          double p = prob(s, a, s2);
          if (p < -tol) throw ConfigError("negative transition probability");
          row += p;
        }
        if (std::abs(row - 1.0) > tol)
          throw ConfigError("transition row (s=" + std::to_string(s) +
                            ", a=" + std::to_string(a) + ") sums to " +
                            std::to_string(row));
      }
    }
    if (static_cast<int>(rewards.size()) != num_agents ||
        static_cast<int>(observation.size()) != num_agents)
      throw ConfigError("rewards/observation must have one table per agent");
    for (int i = 0; i < num_agents; ++i) {
      if (static_cast<std::int64_t>(rewards[i].size()) !=
          static_cast<std::int64_t>(num_states) * num_actions[i])
        throw ConfigError("reward table for agent " + std::to_string(i) +
                          " has wrong size");
      if (static_cast<int>(observation[i].size()) != num_states)
        throw ConfigError("observation map for agent " + std::to_string(i) +
                          " has wrong size");
      for (int s = 0; s < num_states; ++s) {
        if (observation[i][s] < 0 || observation[i][s] >= num_observations[i])
          throw ConfigError("observation index out of range for agent " +
                            std::to_string(i));
      }
    }
  }
};

// Plain-text serialisation.  Line-oriented, whitespace separated:
//   game <num_agents> <num_states>
//   actions <|A_0| ... |A_{N-1}|>
//   observations <|O_0| ... |O_{N-1}|>
//   initial <p(s_0) ... >
//   transition <num_states * joint * num_states doubles>
//   reward <agent> <num_states * |A_i| doubles>     (one line per agent)
//   obsmap <agent> <num_states ints>                (one line per agent)
inline void save_game(std::ostream& os, const TabularMarkovGame& g) {
  os.precision(17);
  os << "game " << g.num_agents << ' ' << g.num_states << '\n';
  os << "actions";
  for (int a : g.num_actions) os << ' ' << a;
  os << "\nobservations";
  for (int o : g.num_observations) os << ' ' << o;
  os << "\ninitial";
  for (double p : g.initial_dist) os << ' ' << p;
  os << "\ntransition";
  for (double p : g.transition) os << ' ' << p;
  os << '\n';
  for (int i = 0; i < g.num_agents; ++i) {
    os << "reward " << i;
    for (double r : g.rewards[i]) os << ' ' << r;
    os << '\n';
  }
  for (int i = 0; i < g.num_agents; ++i) {
    os << "obsmap " << i;
    for (int o : g.observation[i]) os << ' ' << o;
    os << '\n';
  }
}

inline TabularMarkovGame load_game(std::istream& is) {
  auto expect = [&](const std::string& tag) {
    std::string tok;
    if (!(is >> tok) || tok != tag)
      throw ConfigError("game file: expected '" + tag + "', got '" + tok + "'");
  };
  TabularMarkovGame g;
  expect("game");
  if (!(is >> g.num_agents >> g.num_states))
    throw ConfigError("game file: bad header");
  if (g.num_agents <= 0 || g.num_states <= 0)
    throw ConfigError("game file: non-positive sizes in header");
  g.num_actions.resize(g.num_agents);
  g.num_observations.resize(g.num_agents);
  expect("actions");
  for (int& a : g.num_actions)
    if (!(is >> a)) throw ConfigError("game file: truncated action counts");
  expect("observations");
  for (int& o : g.num_observations)
    if (!(is >> o)) throw ConfigError("game file: truncated observation counts");
  expect("initial");
  g.initial_dist.resize(g.num_states);
  for (double& p : g.initial_dist)
    if (!(is >> p)) throw ConfigError("game file: truncated initial distribution");
  expect("transition");
  std::int64_t ja = 1;
  for (int a : g.num_actions) ja *= a;
  g.transition.resize(static_cast<std::size_t>(g.num_states) * ja * g.num_states);
  for (double& p : g.transition)
    if (!(is >> p)) throw ConfigError("game file: truncated transition tensor");
  g.rewards.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    expect("reward");
    int idx = -1;
    if (!(is >> idx) || idx != i) throw ConfigError("game file: reward lines out of order");
    g.rewards[i].resize(static_cast<std::size_t>(g.num_states) * g.num_actions[i]);
    for (double& r : g.rewards[i])
      if (!(is >> r)) throw ConfigError("game file: truncated reward table");
  }
  g.observation.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    expect("obsmap");
    int idx = -1;
    if (!(is >> idx) || idx != i) throw ConfigError("game file: obsmap lines out of order");
    g.observation[i].resize(g.num_states);
    for (int& o : g.observation[i])
      if (!(is >> o)) throw ConfigError("game file: truncated observation map");
  }
  g.validate();
  return g;
}

// Draws a random well-formed game.  Transition rows and the initial
// distribution are normalised draws from U(0,1); rewards are U(-1,1);
// observation maps are random surjections onto a random-sized observation
// space (so partial observability is actually exercised).
inline TabularMarkovGame make_random_game(Rng& rng, int max_states = 4,
                                          int max_agents = 3, int max_actions = 3) {
  TabularMarkovGame g;
  g.num_agents = 1 + rng.uniform_int(max_agents);
  g.num_states = 1 + rng.uniform_int(max_states);
  g.num_actions.resize(g.num_agents);
  g.num_observations.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    g.num_actions[i] = 1 + rng.uniform_int(max_actions);
    g.num_observations[i] = 1 + rng.uniform_int(g.num_states);
  }
  auto normalised = [&](int n, std::vector<double>& out, std::size_t at) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      out[at + j] = 0.05 + rng.uniform();  // bounded away from 0
      sum += out[at + j];
    }
    for (int j = 0; j < n; ++j) out[at + j] /= sum;
  };
  g.initial_dist.resize(g.num_states);
  normalised(g.num_states, g.initial_dist, 0);
  const std::int64_t ja = g.joint_action_count();
  g.transition.resize(static_cast<std::size_t>(g.num_states) * ja * g.num_states);
  for (std::int64_t row = 0; row < static_cast<std::int64_t>(g.num_states) * ja; ++row)
    normalised(g.num_states, g.transition, row * g.num_states);
  g.rewards.resize(g.num_agents);
  g.observation.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    g.rewards[i].resize(static_cast<std::size_t>(g.num_states) * g.num_actions[i]);
    for (double& r : g.rewards[i]) r = rng.uniform(-1.0, 1.0);
    g.observation[i].resize(g.num_states);
    for (int s = 0; s < g.num_states; ++s)
      g.observation[i][s] = rng.uniform_int(g.num_observations[i]);
    // ensure every observation index is hit at least once where possible
    for (int o = 0; o < g.num_observations[i] && o < g.num_states; ++o)
      g.observation[i][o] = o;
  }
  g.validate();
  return g;
}

}  // namespace damarl
