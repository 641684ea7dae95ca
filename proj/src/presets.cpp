#include "ace/presets.hpp"

namespace ace::config {

GlobalConfig preset(std::string_view name) {
  GlobalConfig c;
  c.preset = std::string(name);
  if (name == "paper") {
    c.best_of_n = align::BestOfNConfig::paper();
    c.reward_train = reward::TrainConfig::paper();
    c.ppo = align::PPOConfig::paper();
  } else if (name == "toy") {
    c.reward_train = reward::TrainConfig::toy();
  } else {
    throw Error("unknown preset '" + std::string(name) + "' (expected paper or toy)");
  }
  c.reward_train.seed = c.seed;
  c.ppo.seed = c.seed;
  return c;
}

nlohmann::json snapshot(const GlobalConfig& c) {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [k, v] : c.model_paths) models[k] = v.string();
  return {{"preset", c.preset},
          {"seed", c.seed},
          {"corpus_dir", c.corpus_dir.string()},
          {"output", c.output.string()},
          {"model_paths", models},
          {"backend", c.backend},
          {"best_of_n", c.best_of_n},
          {"reward_train", c.reward_train},
          {"ppo", c.ppo}};
}

}  // namespace ace::config
