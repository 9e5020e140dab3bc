#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "damarl/trainer.hpp"

namespace damarl {

// Converts a physical action delay to whole control steps.  The delay must
// be a whole multiple of dt (to within an absolute slack of 1e-9 seconds);
// anything else silently changes the experiment, so it is rejected.
inline int delay_steps_from_seconds(double delay_seconds, double dt) {
  if (dt <= 0.0) throw ConfigError("delay conversion: dt must be positive");
  if (delay_seconds < 0.0)
    throw ConfigError("delay conversion: delay must be non-negative");
  const int k = static_cast<int>(std::llround(delay_seconds / dt));
  if (std::abs(k * dt - delay_seconds) > 1e-9)
    throw ConfigError("delay of " + std::to_string(delay_seconds) +
                      " s is not a whole multiple of dt = " + std::to_string(dt) +
                      " s; choose a delay on the control grid");
  return k;
}

// Builds a TrainerConfig from the JSON produced by to_json(TrainerConfig)
// (or a hand-written subset of it; missing keys keep their defaults).
inline TrainerConfig config_from_json(const nlohmann::json& j) {
  TrainerConfig c;
  c.scenario.scenario = j.value("scenario", c.scenario.scenario);
  c.scenario.dt = j.value("dt", c.scenario.dt);
  c.scenario.episode_length = j.value("episode_length", c.scenario.episode_length);
  c.scenario.fixed_prey = j.value("fixed_prey", c.scenario.fixed_prey);
  if (j.contains("delay_steps"))
    c.delay_steps = j.at("delay_steps").get<std::vector<int>>();
  if (j.contains("variant"))
    c.learner.variant = parse_variant(j.at("variant").get<std::string>());
  c.learner.hidden = j.value("hidden", c.learner.hidden);
  c.learner.lr = j.value("lr", c.learner.lr);
  c.learner.gamma = j.value("gamma", c.learner.gamma);
  c.learner.kappa = j.value("kappa", c.learner.kappa);
  c.learner.tau = j.value("tau", c.learner.tau);
  c.learner.grad_clip = j.value("grad_clip", c.learner.grad_clip);
  c.episodes = j.value("episodes", c.episodes);
  c.batch = j.value("batch", c.batch);
  c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
  c.warmup = j.value("warmup", c.warmup);
  c.noise_start = j.value("noise_start", c.noise_start);
  c.noise_end = j.value("noise_end", c.noise_end);
  c.noise_frac = j.value("noise_frac", c.noise_frac);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline TrainerConfig config_from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + file.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// Writes the fully-resolved configuration next to the run outputs so the
// run is reproducible from its artifacts alone.  Round-trip stable: loading
// the written file and writing it again produces identical bytes.
inline void write_resolved_config(const std::filesystem::path& dir,
                                  const TrainerConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "resolved_config.json");
  if (!out) throw ConfigError("config: cannot write into " + dir.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace damarl
