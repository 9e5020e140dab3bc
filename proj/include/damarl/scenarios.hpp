#pragma once

#include <memory>

#include "damarl/env.hpp"
#include "damarl/intersection.hpp"
#include "damarl/particle.hpp"

namespace damarl {

inline std::unique_ptr<Env> make_env(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.scenario == "coop_comm") return std::make_unique<CoopCommEnv>(cfg);
  if (cfg.scenario == "coop_nav") return std::make_unique<CoopNavEnv>(cfg);
  if (cfg.scenario == "predator_prey") return std::make_unique<PredatorPreyEnv>(cfg);
  if (cfg.scenario == "intersection") return std::make_unique<IntersectionEnv>(cfg);
  throw ConfigError("unknown scenario '" + cfg.scenario + "'");
}

}  // namespace damarl
