#include "ace/align.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <random>

#include "ace/text.hpp"

namespace ace::align {

// -- Best-of-n ---------------------------------------------------------------------

void BestOfNConfig::validate() const {
  if (n < 1) throw Error("n must be at least 1");
  if (!(temperature >= 0.0)) throw Error("temperature must be >= 0");
  if (max_tokens < 1) throw Error("max_tokens must be at least 1");
  if (!(prob_cutoff >= 0.0 && prob_cutoff < 1.0)) throw Error("prob_cutoff must lie in [0, 1)");
  if (!(temperature_step >= 0.0)) throw Error("temperature_step must be >= 0");
}

llm::GenerationParams BestOfNConfig::params_for(int candidate) const {
  llm::GenerationParams p;
  p.temperature = temperature;
  p.max_tokens = max_tokens;
  if (prob_cutoff > 0.0) p.top_p_cutoff = prob_cutoff;
  if (diversify) {
    p.temperature = temperature + candidate * temperature_step;
    p.seed = static_cast<std::uint64_t>(candidate);
  }
  return p;
}

BestOfNConfig BestOfNConfig::paper() { return {}; }

void to_json(nlohmann::json& j, const BestOfNConfig& c) {
  j = nlohmann::json{{"n", c.n},
                     {"temperature", c.temperature},
                     {"max_tokens", c.max_tokens},
                     {"prob_cutoff", c.prob_cutoff},
                     {"diversify", c.diversify},
                     {"temperature_step", c.temperature_step}};
}

BestOfNConfig best_of_n_config_from_json(const nlohmann::json& j, BestOfNConfig c) {
  corpus::require_known_keys(j, {"n", "temperature", "max_tokens", "prob_cutoff", "diversify", "temperature_step"},
                             "invalid best-of-n config");
  try {
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("max_tokens")) c.max_tokens = j.at("max_tokens").get<int>();
    if (j.contains("prob_cutoff")) c.prob_cutoff = j.at("prob_cutoff").get<double>();
    if (j.contains("diversify")) c.diversify = j.at("diversify").get<bool>();
    if (j.contains("temperature_step")) c.temperature_step = j.at("temperature_step").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid best-of-n config: ") + e.what());
  }
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const BestOfNResult& r) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    nlohmann::json e{{"text", c.text}, {"score", c.score}};
    e["duplicate_of"] = c.duplicate_of ? nlohmann::json(*c.duplicate_of) : nlohmann::json(nullptr);
    cands.push_back(std::move(e));
  }
  j = nlohmann::json{{"chosen_index", r.chosen_index}, {"chosen", r.chosen}, {"candidates", cands}};
}

BestOfNError::BestOfNError(const std::string& what, std::vector<std::string> partial)
    : llm::BackendError(what), partial_(std::move(partial)) {}

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw Error("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

BestOfNResult best_of_n(llm::ChatBackend& backend, const std::vector<llm::ChatMessage>& prompt,
                        const Scorer& scorer, const BestOfNConfig& config) {
  config.validate();
  std::vector<std::future<std::string>> pending;
  pending.reserve(static_cast<std::size_t>(config.n));
  for (int i = 0; i < config.n; ++i) {
    const auto params = config.params_for(i);
    pending.push_back(std::async(std::launch::async, [&backend, &prompt, params] {
      return backend.complete(prompt, params);
    }));
  }
  std::vector<std::string> texts;
  std::string first_error;
  for (auto& f : pending) {
    try {
      texts.push_back(f.get());
    } catch (const std::exception& e) {
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty())
    throw BestOfNError("candidate generation failed: " + first_error, std::move(texts));

  BestOfNResult result;
  std::map<std::string, std::size_t> first_seen;
  std::vector<double> scores;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Candidate c{texts[i], 0.0, std::nullopt};
    if (auto it = first_seen.find(texts[i]); it != first_seen.end()) {
      c.duplicate_of = it->second;
      c.score = result.candidates[it->second].score;
    } else {
      first_seen.emplace(texts[i], i);
      c.score = scorer(texts[i]);
    }
    scores.push_back(c.score);
    result.candidates.push_back(std::move(c));
  }
  result.chosen_index = argmax_first(scores);
  result.chosen = result.candidates[result.chosen_index].text;
  return result;
}

BestOfNResult best_of_n(llm::ChatBackend& backend, const reward::RewardModel& model,
                        const reward::DialogueContext& context, const BestOfNConfig& config,
                        std::span<const corpus::DialogueThread> few_shots,
                        const llm::PromptOptions& prompt_options) {
  const auto prompt = llm::assemble_prompt(context.problem, context.prefix, few_shots, prompt_options);
  return best_of_n(backend, prompt, [&](const std::string& t) { return model.score(context, t); }, config);
}

// -- toy policy --------------------------------------------------------------------

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

ToyPolicy::ToyPolicy(std::vector<std::string> contexts, std::vector<std::vector<std::string>> candidates,
                     std::vector<std::vector<double>> logits)
    : contexts_(std::move(contexts)), candidates_(std::move(candidates)), logits_(std::move(logits)) {
  if (contexts_.size() != candidates_.size()) throw Error("one candidate list is required per context");
  if (logits_.empty()) {
    for (const auto& c : candidates_) logits_.emplace_back(c.size(), 0.0);
  }
  if (logits_.size() != candidates_.size()) throw Error("one logit vector is required per context");
  for (std::size_t c = 0; c < candidates_.size(); ++c) {
    if (candidates_[c].empty()) throw Error("context '" + contexts_[c] + "' has no candidates");
    if (logits_[c].size() != candidates_[c].size())
      throw Error("logit count does not match candidate count for context '" + contexts_[c] + "'");
    for (double l : logits_[c])
      if (!std::isfinite(l)) throw Error("non-finite initial logit");
  }
  reference_ = logits_;
}

std::size_t ToyPolicy::index_of(const std::string& id) const {
  auto it = std::find(contexts_.begin(), contexts_.end(), id);
  if (it == contexts_.end()) throw Error("unknown policy context '" + id + "'");
  return static_cast<std::size_t>(it - contexts_.begin());
}

std::vector<double> ToyPolicy::log_probabilities(std::size_t c) const { return log_softmax(logits_.at(c)); }

std::vector<double> ToyPolicy::reference_log_probabilities(std::size_t c) const {
  return log_softmax(reference_.at(c));
}

std::vector<double> ToyPolicy::probabilities(std::size_t c) const {
  auto lp = log_probabilities(c);
  for (double& x : lp) x = std::exp(x);
  return lp;
}

double ToyPolicy::kl(std::size_t c) const {
  const auto lp = log_probabilities(c);
  const auto lr = reference_log_probabilities(c);
  double kl = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) kl += std::exp(lp[i]) * (lp[i] - lr[i]);
  return std::max(0.0, kl);
}

double ToyPolicy::mean_kl() const {
  if (contexts_.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < contexts_.size(); ++c) s += kl(c);
  return s / static_cast<double>(contexts_.size());
}

RewardTable reward_table(const ToyPolicy& policy, const reward::RewardModel& model,
                         std::span<const reward::DialogueContext> contexts) {
  if (contexts.size() != policy.context_count()) throw Error("one dialogue context is required per policy context");
  RewardTable t(policy.context_count());
  for (std::size_t c = 0; c < t.size(); ++c)
    for (const auto& y : policy.candidates(c)) t[c].push_back(model.score(contexts[c], y));
  return t;
}

namespace {

void check_table(const ToyPolicy& policy, const RewardTable& rewards) {
  if (rewards.size() != policy.context_count()) throw Error("reward table has the wrong number of contexts");
  for (std::size_t c = 0; c < rewards.size(); ++c)
    if (rewards[c].size() != policy.candidates(c).size())
      throw Error("reward table row " + std::to_string(c) + " has the wrong number of candidates");
}

}  // namespace

RjsLoss rjs_loss(const ToyPolicy& policy, std::size_t context, std::span<const double> rewards) {
  if (rewards.size() != policy.candidates(context).size()) throw Error("reward count does not match candidates");
  RjsLoss out;
  out.best = argmax_first(rewards);
  const auto lp = policy.log_probabilities(context);
  out.loss = -lp[out.best];
  out.grad.resize(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) out.grad[i] = std::exp(lp[i]) - (i == out.best ? 1.0 : 0.0);
  return out;
}

RjsLoss rjs_loss(const ToyPolicy& policy, std::size_t context, const reward::RewardModel& model,
                 const reward::DialogueContext& dialogue) {
  std::vector<double> scores;
  for (const auto& y : policy.candidates(context)) scores.push_back(model.score(dialogue, y));
  return rjs_loss(policy, context, scores);
}

std::vector<RjsEpochLog> rjs_train(ToyPolicy& policy, const RewardTable& rewards, double learning_rate, int epochs) {
  check_table(policy, rewards);
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (epochs < 1) throw Error("epochs must be at least 1");
  std::vector<RjsEpochLog> log;
  const double inv = 1.0 / static_cast<double>(policy.context_count());
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::vector<RjsLoss> losses;
    for (std::size_t c = 0; c < policy.context_count(); ++c) losses.push_back(rjs_loss(policy, c, rewards[c]));
    for (std::size_t c = 0; c < policy.context_count(); ++c) {
      auto& l = policy.mutable_logits(c);
      for (std::size_t i = 0; i < l.size(); ++i) l[i] -= learning_rate * inv * losses[c].grad[i];
    }
    double mean = 0.0;
    for (std::size_t c = 0; c < policy.context_count(); ++c) mean += rjs_loss(policy, c, rewards[c]).loss;
    log.push_back({epoch, mean * inv});
  }
  return log;
}

// -- PPO ---------------------------------------------------------------------------

void PPOConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be positive");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error("beta must be >= 0");
  if (!(clip_eps > 0.0)) throw Error("clip_eps must be positive");
  if (rollouts_per_epoch < 1) throw Error("rollouts_per_epoch must be at least 1");
  if (update_epochs < 1) throw Error("update_epochs must be at least 1");
}

PPOConfig PPOConfig::paper() {
  PPOConfig c;
  c.learning_rate = 5e-6;
  c.batch_size = 64;
  c.epochs = 10;
  return c;
}

void to_json(nlohmann::json& j, const PPOConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"beta", c.beta},
                     {"clip_eps", c.clip_eps},
                     {"seed", c.seed},
                     {"rollouts_per_epoch", c.rollouts_per_epoch},
                     {"update_epochs", c.update_epochs}};
}

PPOConfig ppo_config_from_json(const nlohmann::json& j, PPOConfig c) {
  corpus::require_known_keys(j,
                             {"learning_rate", "batch_size", "epochs", "beta", "clip_eps", "seed",
                              "rollouts_per_epoch", "update_epochs"},
                             "invalid PPO config");
  try {
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("clip_eps")) c.clip_eps = j.at("clip_eps").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("rollouts_per_epoch")) c.rollouts_per_epoch = j.at("rollouts_per_epoch").get<int>();
    if (j.contains("update_epochs")) c.update_epochs = j.at("update_epochs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid PPO config: ") + e.what());
  }
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const PPOEpochLog& e) {
  j = nlohmann::json{{"epoch", e.epoch},
                     {"mean_sampled_reward", e.mean_sampled_reward},
                     {"expected_reward", e.expected_reward},
                     {"kl", e.kl},
                     {"objective", e.objective}};
}

PPODiverged::PPODiverged(int epoch)
    : Error("policy optimization diverged (non-finite update) at epoch " + std::to_string(epoch)), epoch_(epoch) {}

double expected_reward(const ToyPolicy& policy, const RewardTable& rewards) {
  check_table(policy, rewards);
  double total = 0.0;
  for (std::size_t c = 0; c < policy.context_count(); ++c) {
    const auto p = policy.probabilities(c);
    for (std::size_t i = 0; i < p.size(); ++i) total += p[i] * rewards[c][i];
  }
  return total / static_cast<double>(policy.context_count());
}

std::vector<PPOEpochLog> ppo_train(ToyPolicy& policy, const RewardTable& rewards, const PPOConfig& config) {
  config.validate();
  check_table(policy, rewards);
  for (std::size_t c = 0; c < policy.context_count(); ++c)
    if (policy.candidates(c).size() < 2)
      throw Error("context '" + policy.context_id(c) + "' needs at least two candidates");

  struct Sample {
    std::size_t context;
    std::size_t action;
    double old_logp;
    double advantage;
  };
  constexpr double kAdamB1 = 0.9, kAdamB2 = 0.999, kAdamEps = 1e-8;

  const std::size_t C = policy.context_count();
  std::vector<std::vector<double>> m(C), v(C), ref_lp(C);
  for (std::size_t c = 0; c < C; ++c) {
    m[c].assign(policy.logits(c).size(), 0.0);
    v[c].assign(policy.logits(c).size(), 0.0);
    ref_lp[c] = policy.reference_log_probabilities(c);
  }
  std::vector<double> baseline(C, 0.0);
  std::vector<std::size_t> seen(C, 0);
  std::mt19937_64 rng(config.seed);
  std::uint64_t step = 0;
  std::vector<PPOEpochLog> log;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double sampled_reward = 0.0;
    std::size_t sampled = 0;
    for (int rollout = 0; rollout < config.rollouts_per_epoch; ++rollout) {
      std::vector<std::vector<double>> old_lp(C);
      for (std::size_t c = 0; c < C; ++c) old_lp[c] = policy.log_probabilities(c);

      std::vector<Sample> batch;
      batch.reserve(static_cast<std::size_t>(config.batch_size));
      for (int b = 0; b < config.batch_size; ++b) {
        const std::size_t c = text::uniform_index(rng, C);
        const double u = text::uniform_unit(rng);
        std::size_t a = 0;
        double cdf = std::exp(old_lp[c][0]);
        while (a + 1 < old_lp[c].size() && u >= cdf) cdf += std::exp(old_lp[c][++a]);
        const double shaped = rewards[c][a] - config.beta * (old_lp[c][a] - ref_lp[c][a]);
        ++seen[c];
        baseline[c] += (shaped - baseline[c]) / static_cast<double>(seen[c]);
        batch.push_back({c, a, old_lp[c][a], shaped - baseline[c]});
        sampled_reward += rewards[c][a];
        ++sampled;
      }

      const double inv = 1.0 / static_cast<double>(batch.size());
      for (int k = 0; k < config.update_epochs; ++k) {
        std::vector<std::vector<double>> grad(C);
        std::vector<std::vector<double>> lp(C);
        for (std::size_t c = 0; c < C; ++c) {
          grad[c].assign(policy.logits(c).size(), 0.0);
          lp[c] = policy.log_probabilities(c);
        }
        // Gradient of the loss -mean(min(rho A, clip(rho) A)).
        for (const auto& s : batch) {
          const double rho = std::exp(lp[s.context][s.action] - s.old_logp);
          const bool active = s.advantage >= 0.0 ? rho <= 1.0 + config.clip_eps : rho >= 1.0 - config.clip_eps;
          if (!active) continue;
          auto& g = grad[s.context];
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double dlogp = (i == s.action ? 1.0 : 0.0) - std::exp(lp[s.context][i]);
            g[i] -= inv * s.advantage * rho * dlogp;
          }
        }
        ++step;
        const double bc1 = 1.0 - std::pow(kAdamB1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(kAdamB2, static_cast<double>(step));
        for (std::size_t c = 0; c < C; ++c) {
          auto& l = policy.mutable_logits(c);
          for (std::size_t i = 0; i < l.size(); ++i) {
            m[c][i] = kAdamB1 * m[c][i] + (1.0 - kAdamB1) * grad[c][i];
            v[c][i] = kAdamB2 * v[c][i] + (1.0 - kAdamB2) * grad[c][i] * grad[c][i];
            l[i] -= config.learning_rate * (m[c][i] / bc1) / (std::sqrt(v[c][i] / bc2) + kAdamEps);
            if (!std::isfinite(l[i])) throw PPODiverged(epoch);
          }
        }
      }
    }
    PPOEpochLog e;
    e.epoch = epoch;
    e.mean_sampled_reward = sampled_reward / static_cast<double>(sampled);
    e.expected_reward = expected_reward(policy, rewards);
    e.kl = policy.mean_kl();
    e.objective = e.expected_reward - config.beta * e.kl;
    if (!std::isfinite(e.objective)) throw PPODiverged(epoch);
    log.push_back(e);
  }
  return log;
}

}  // namespace ace::align
