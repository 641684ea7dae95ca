#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ace/align.hpp"
#include "ace/reward.hpp"

namespace ace::config {

inline constexpr std::uint64_t kDefaultSeed = 1234;

/// Everything a CLI run resolves before touching data.
struct GlobalConfig {
  std::string preset = "toy";
  std::filesystem::path corpus_dir;
  std::map<std::string, std::filesystem::path> model_paths;
  nlohmann::json backend = nlohmann::json::object();
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path output;

  align::BestOfNConfig best_of_n;
  reward::TrainConfig reward_train;
  align::PPOConfig ppo;
};

/// "paper": Best-of-n n=5, temperature 0.0, max_tokens 1024, cutoff 0.01;
/// lr 5e-6, batch 64, 10 epochs for both training loops.
/// "toy": same sampling settings, lr 1e-2 for desk-scale training.
GlobalConfig preset(std::string_view name);

/// The effective hyperparameters, as printed by --show-config.
nlohmann::json snapshot(const GlobalConfig& config);

}  // namespace ace::config
