#pragma once

// Automated evaluation: for every assistant turn, match generated utterances
// against the turn's references (main + alternates) on a similarity-weighted
// bipartite graph, one graph per metric, and micro-average over turns.
//
// Pre-generated utterance file:
//   {"utterances": [{"thread_id": str, "turn_idx": int, "generated": [str, ...]}, ...]}
// turn_idx is the index of the assistant turn within the thread's turns.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/align.hpp"
#include "ace/corpus.hpp"
#include "ace/llmclient.hpp"
#include "ace/matching.hpp"
#include "ace/metrics.hpp"
#include "ace/reward.hpp"

namespace ace::eval {

class UtteranceSource {
 public:
  virtual ~UtteranceSource() = default;
  /// Utterances for the assistant turn at `turn_idx`; throws on failure.
  virtual std::vector<std::string> generate(const corpus::Problem& problem, const corpus::DialogueThread& thread,
                                            std::size_t turn_idx) = 0;
  virtual std::string describe() const = 0;
};

class PregeneratedSource final : public UtteranceSource {
 public:
  explicit PregeneratedSource(std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> utterances,
                              std::string label = "pregenerated");
  static std::unique_ptr<PregeneratedSource> from_file(const std::filesystem::path& path);
  std::vector<std::string> generate(const corpus::Problem& problem, const corpus::DialogueThread& thread,
                                    std::size_t turn_idx) override;
  std::string describe() const override { return label_; }

 private:
  std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> utterances_;
  std::string label_;
};

/// One utterance per turn from the backend: Best-of-n under `model` when
/// given, else a single completion.
class BackendSource final : public UtteranceSource {
 public:
  BackendSource(llm::ChatBackend& backend, const reward::RewardModel* model, align::BestOfNConfig config,
                std::vector<corpus::DialogueThread> few_shots = {}, llm::PromptOptions prompt_options = {});
  std::vector<std::string> generate(const corpus::Problem& problem, const corpus::DialogueThread& thread,
                                    std::size_t turn_idx) override;
  std::string describe() const override;

 private:
  llm::ChatBackend& backend_;
  const reward::RewardModel* model_;
  align::BestOfNConfig config_;
  std::vector<corpus::DialogueThread> few_shots_;
  llm::PromptOptions prompt_options_;
};

struct MetricTurnReport {
  matching::MatchReport report;
  /// CodeBLEU only: some edge lacked code on one side and used bleu4.
  bool fallback = false;
};

struct TurnResult {
  std::string thread_id;
  std::size_t turn_idx = 0;
  std::vector<std::string> generated;
  std::vector<std::string> references;
  std::map<metrics::Metric, MetricTurnReport> metrics;
  std::optional<std::string> error;  // set when generation failed; the turn is skipped
};

struct Aggregate {
  double tp = 0.0;
  double left = 0.0;
  double right = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalRun {
  std::string corpus_ref;
  std::string backend_desc;
  std::vector<metrics::Metric> metric_set;
  std::vector<TurnResult> per_turn;
  std::map<metrics::Metric, Aggregate> aggregate;
  bool partial = false;
};

struct EvalOptions {
  std::string corpus_ref;
  /// Worker threads for turn evaluation; 0 = hardware concurrency. Ignored
  /// (serial) when the embedding provider is not concurrent-safe.
  unsigned workers = 0;
};

/// Edge weights for one metric between generated (rows) and reference
/// (columns) utterances. Sets `fallback` when CodeBLEU fell back to bleu4.
matching::WeightedBipartiteGraph build_graph(metrics::Metric metric, std::span<const std::string> generated,
                                             std::span<const std::string> references,
                                             const metrics::EmbeddingProvider* provider, bool* fallback = nullptr);

/// Micro-average of the given turns' reports: P = sum tp / sum left,
/// R = sum tp / sum right.
std::map<metrics::Metric, Aggregate> aggregate(std::span<const TurnResult> turns,
                                               std::span<const metrics::Metric> metric_set);

EvalRun evaluate(const corpus::Corpus& corpus, UtteranceSource& source, std::span<const metrics::Metric> metric_set,
                 const metrics::EmbeddingProvider* provider = nullptr, const EvalOptions& options = {});

nlohmann::json to_json(const EvalRun& run);

}  // namespace ace::eval
