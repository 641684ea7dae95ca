#pragma once

// Response selection (Best-of-n reranking) and policy optimization on an
// enumerated softmax policy: the rejection-sampling loss and a clipped,
// KL-shaped PPO loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/llmclient.hpp"
#include "ace/reward.hpp"

namespace ace::align {

struct BestOfNConfig {
  int n = 5;
  double temperature = 0.0;
  int max_tokens = 1024;
  double prob_cutoff = 0.01;
  /// Candidate i samples at temperature + i * temperature_step with seed i.
  bool diversify = false;
  double temperature_step = 0.2;

  void validate() const;
  llm::GenerationParams params_for(int candidate) const;
  /// n=5, temperature 0.0, max_tokens 1024, cutoff 0.01.
  static BestOfNConfig paper();
};

void to_json(nlohmann::json& j, const BestOfNConfig& c);
BestOfNConfig best_of_n_config_from_json(const nlohmann::json& j, BestOfNConfig base = {});

struct Candidate {
  std::string text;
  double score = 0.0;
  /// Index of the first identical candidate; duplicates are not rescored.
  std::optional<std::size_t> duplicate_of;
};

struct BestOfNResult {
  std::size_t chosen_index = 0;
  std::string chosen;
  std::vector<Candidate> candidates;
};

void to_json(nlohmann::json& j, const BestOfNResult& r);

class BestOfNError : public llm::BackendError {
 public:
  BestOfNError(const std::string& what, std::vector<std::string> partial);
  /// Completions that did succeed, in candidate order.
  const std::vector<std::string>& partial() const noexcept { return partial_; }

 private:
  std::vector<std::string> partial_;
};

/// First index of the maximum; throws Error on an empty span.
std::size_t argmax_first(std::span<const double> scores);

using Scorer = std::function<double(const std::string&)>;

/// Requests n completions concurrently, scores each distinct text once, and
/// returns the argmax (lowest index on ties).
BestOfNResult best_of_n(llm::ChatBackend& backend, const std::vector<llm::ChatMessage>& prompt,
                        const Scorer& scorer, const BestOfNConfig& config);

/// Builds the prompt from `context` and scores with `model`.
BestOfNResult best_of_n(llm::ChatBackend& backend, const reward::RewardModel& model,
                        const reward::DialogueContext& context, const BestOfNConfig& config,
                        std::span<const corpus::DialogueThread> few_shots = {},
                        const llm::PromptOptions& prompt_options = {});

// -- toy policy --------------------------------------------------------------------

/// Explicit softmax policy over a fixed candidate pool per context.
class ToyPolicy {
 public:
  /// Uniform initial logits when `logits` is empty. The reference policy is a
  /// frozen copy of the initial logits.
  ToyPolicy(std::vector<std::string> contexts, std::vector<std::vector<std::string>> candidates,
            std::vector<std::vector<double>> logits = {});

  std::size_t context_count() const noexcept { return contexts_.size(); }
  const std::string& context_id(std::size_t c) const { return contexts_.at(c); }
  std::size_t index_of(const std::string& context_id) const;
  const std::vector<std::string>& candidates(std::size_t c) const { return candidates_.at(c); }
  const std::vector<double>& logits(std::size_t c) const { return logits_.at(c); }
  std::vector<double>& mutable_logits(std::size_t c) { return logits_.at(c); }
  const std::vector<double>& reference_logits(std::size_t c) const { return reference_.at(c); }

  std::vector<double> probabilities(std::size_t c) const;
  std::vector<double> log_probabilities(std::size_t c) const;
  std::vector<double> reference_log_probabilities(std::size_t c) const;
  /// KL(pi(.|c) || pi_ref(.|c)).
  double kl(std::size_t c) const;
  /// Mean KL over contexts.
  double mean_kl() const;

 private:
  std::vector<std::string> contexts_;
  std::vector<std::vector<std::string>> candidates_;
  std::vector<std::vector<double>> logits_;
  std::vector<std::vector<double>> reference_;
};

std::vector<double> log_softmax(std::span<const double> logits);

/// rewards[c][s] = reward of candidate s in context c.
using RewardTable = std::vector<std::vector<double>>;

/// Scores every candidate with the reward model; contexts[c] is the dialogue
/// context of policy context c.
RewardTable reward_table(const ToyPolicy& policy, const reward::RewardModel& model,
                         std::span<const reward::DialogueContext> contexts);

struct RjsLoss {
  double loss = 0.0;
  std::size_t best = 0;
  std::vector<double> grad;  // d loss / d logits(c)
};

/// y_best = argmax of `rewards` (lowest index on ties);
/// loss = -log softmax(logits)[y_best], grad = softmax - e_best.
RjsLoss rjs_loss(const ToyPolicy& policy, std::size_t context, std::span<const double> rewards);
RjsLoss rjs_loss(const ToyPolicy& policy, std::size_t context, const reward::RewardModel& model,
                 const reward::DialogueContext& dialogue);

struct RjsEpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

/// Full-batch gradient descent on the mean rejection-sampling loss.
std::vector<RjsEpochLog> rjs_train(ToyPolicy& policy, const RewardTable& rewards, double learning_rate, int epochs);

struct PPOConfig {
  double learning_rate = 1e-2;
  int batch_size = 64;
  int epochs = 10;
  double beta = 0.1;
  double clip_eps = 0.2;
  std::uint64_t seed = 0;
  /// Sampled batches per epoch; each is followed by update_epochs Adam steps.
  int rollouts_per_epoch = 32;
  int update_epochs = 4;

  void validate() const;
  /// lr 5e-6, batch 64, 10 epochs.
  static PPOConfig paper();
};

void to_json(nlohmann::json& j, const PPOConfig& c);
PPOConfig ppo_config_from_json(const nlohmann::json& j, PPOConfig base = {});

struct PPOEpochLog {
  int epoch = 0;
  double mean_sampled_reward = 0.0;
  double expected_reward = 0.0;  // mean over contexts of E_pi[r]
  double kl = 0.0;               // mean over contexts of KL(pi || pi_ref)
  double objective = 0.0;        // expected_reward - beta * kl
};

void to_json(nlohmann::json& j, const PPOEpochLog& e);

class PPODiverged : public Error {
 public:
  explicit PPODiverged(int epoch);
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Shaped reward r - beta (log pi - log pi_ref), advantage against a
/// per-context running mean, clipped-ratio surrogate optimized with Adam.
/// Deterministic given config.seed.
std::vector<PPOEpochLog> ppo_train(ToyPolicy& policy, const RewardTable& rewards, const PPOConfig& config);

/// Mean over contexts of E_pi[r] and of KL, evaluated exactly.
double expected_reward(const ToyPolicy& policy, const RewardTable& rewards);

}  // namespace ace::align
