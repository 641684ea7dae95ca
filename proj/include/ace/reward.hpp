#pragma once

// Linear reward model r(x, y) = theta . phi(x, y) trained with the pairwise
// ranking loss -log sigmoid(r(x, y_chosen) - r(x, y_rejected)).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/corpus.hpp"
#include "ace/error.hpp"

namespace ace::reward {

inline constexpr std::size_t kHashedSlots = std::size_t{1} << 16;
inline constexpr std::size_t kStructuralSlots = 16;
inline constexpr std::size_t kDimension = kHashedSlots + kStructuralSlots;

/// Named structural features; index kHashedSlots + value.
enum class Slot : std::size_t {
  ends_with_question = 0,
  contains_code_fence = 1,
  length_short = 2,      // <= 8 tokens
  length_medium = 3,     // 9..20
  length_long = 4,       // 21..50
  length_very_long = 5,  // > 50
  bug_fix_overlap = 6,
  repetition = 7,
  bias = 8,
  has_question_mark = 9,
  question_word_lead = 10,
  context_overlap = 11,
  code_identifier_overlap = 12,
};

constexpr std::size_t slot_index(Slot s) { return kHashedSlots + static_cast<std::size_t>(s); }

struct FeatureConfig {
  std::vector<int> ngram_orders{1, 2};
  std::uint64_t hash_seed = 0x5eedULL;
  bool cross_grams = true;
  bool operator==(const FeatureConfig&) const = default;
};

/// What the response answers: the problem and the dialogue so far (ending
/// with the student turn being answered).
struct DialogueContext {
  corpus::Problem problem;
  std::vector<corpus::Turn> prefix;
};

/// Sparse, sorted by index, no duplicate indices.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<std::pair<std::uint32_t, double>> entries);

  double get(std::size_t index) const;
  double dot(std::span<const double> dense) const;
  const std::vector<std::pair<std::uint32_t, double>>& entries() const noexcept { return entries_; }
  /// this - other
  FeatureVector minus(const FeatureVector& other) const;

 private:
  std::vector<std::pair<std::uint32_t, double>> entries_;
};

/// Hashed response n-grams and (context word, response word) cross-grams, each
/// block scaled to unit L2 norm, plus the structural slots.
FeatureVector featurize(const DialogueContext& context, std::string_view response,
                        const FeatureConfig& config = {});

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double pairwise_accuracy = 0.0;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 0;
  double l2 = 1e-4;

  /// Throws Error when a field is out of range.
  void validate() const;
  static TrainConfig toy();
  /// PPO fine-tuning hyperparameters reported for the hosted models
  /// (lr 5e-6, batch 64, 10 epochs).
  static TrainConfig paper();
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep `base` values.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = TrainConfig::toy());

class RewardModel {
 public:
  FeatureConfig feature_config;
  std::vector<double> theta = std::vector<double>(kDimension, 0.0);
  std::vector<EpochLog> training_log;

  double score(const FeatureVector& phi) const { return phi.dot(theta); }
  double score(const DialogueContext& context, std::string_view response) const;

  nlohmann::json to_json() const;
  static RewardModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RewardModel load(const std::filesystem::path& path);
};

double sigmoid(double x);
/// -log sigmoid(delta), evaluated without overflow for any finite delta.
double ranking_loss(double delta);

struct LossAndGrad {
  double loss = 0.0;
  double delta = 0.0;
  std::vector<double> grad;  // dense, kDimension
};

/// loss = -log sigmoid(delta) + (l2/2)|theta|^2,
/// grad = -(1 - sigmoid(delta)) (phi_chosen - phi_rejected) + l2 theta.
LossAndGrad pairwise_loss(const RewardModel& model, const DialogueContext& context, std::string_view chosen,
                          std::string_view rejected, double l2 = 0.0);

/// Resolves the pair's problem in `corpus`.
DialogueContext context_for(const corpus::Corpus& corpus, const corpus::PreferencePair& pair);

struct TrainingExample {
  FeatureVector chosen;
  FeatureVector rejected;
};

std::vector<TrainingExample> make_examples(const corpus::Corpus& corpus,
                                           std::span<const corpus::PreferencePair> pairs,
                                           const FeatureConfig& features = {});

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(int epoch);
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Mini-batch gradient descent on the mean pairwise loss. Batches come from a
/// seeded shuffle each epoch, so equal inputs give bitwise-equal theta.
RewardModel train(std::span<const TrainingExample> examples, const TrainConfig& config,
                  const FeatureConfig& features = {});
RewardModel train(const corpus::Corpus& corpus, std::span<const corpus::PreferencePair> pairs,
                  const TrainConfig& config, const FeatureConfig& features = {});

/// Fraction of examples with score(chosen) > score(rejected).
double pairwise_accuracy(const RewardModel& model, std::span<const TrainingExample> examples);

/// Named models in a directory (<dir>/<name>.json). The two alignment
/// pipelines register under kPpoModel and kBestOfNModel.
inline constexpr std::string_view kPpoModel = "ppo";
inline constexpr std::string_view kBestOfNModel = "best_of_n";

class ModelStore {
 public:
  explicit ModelStore(std::filesystem::path dir);
  void put(std::string_view name, const RewardModel& model) const;
  RewardModel get(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::filesystem::path path_for(std::string_view name) const;
  std::filesystem::path dir_;
};

}  // namespace ace::reward
