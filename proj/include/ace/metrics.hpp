#pragma once

// Utterance similarity metrics: BLEU-4, ROUGE-L, CodeBLEU, and embedding F1.
// Every score lies in [0, 1]; `components` holds the quantities the value is
// recombined from.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ace/error.hpp"

namespace ace::metrics {

enum class Metric { bleu4, rougeL, codebleu, embed_f1 };

std::string to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view s);
/// Comma-separated list, e.g. "bleu4,rougeL". Throws Error on unknown names.
std::vector<Metric> parse_metric_list(std::string_view s);

struct SimilarityScore {
  double value = 0.0;
  Metric metric = Metric::bleu4;
  std::map<std::string, double> components;
  /// Set when an input was empty and the value defaulted to 0.
  bool empty_input = false;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// -- BLEU ------------------------------------------------------------------------

/// Additive smoothing applied to an n-gram order with no clipped matches.
inline constexpr double kBleuEpsilon = 1e-9;

/// BLEU-4 over pre-tokenized sequences. `weight(token)` scales each token's
/// contribution to the clipped precision counts; an n-gram weighs the mean of
/// its tokens' weights. With a null weight function every n-gram counts 1.
/// Returns 0 when either side is empty (no error).
using TokenWeight = std::function<double(const std::string&)>;
SimilarityScore bleu4_tokens(std::span<const std::string> candidate, std::span<const std::string> reference,
                             const TokenWeight& weight = {});

/// value = BP * exp(mean_n log p_n), BP = min(1, exp(1 - |ref|/|cand|)).
/// Empty candidate -> 0 with empty_input set; empty reference -> MetricError.
SimilarityScore bleu4(std::string_view candidate, std::string_view reference);

/// LCS F-measure; components hold lcs, precision, recall.
SimilarityScore rougeL(std::string_view candidate, std::string_view reference);

// -- CodeBLEU --------------------------------------------------------------------

struct CodeBleuWeights {
  double ngram = 0.25;
  double weighted_ngram = 0.25;
  double syntax = 0.25;
  double dataflow = 0.25;
  double keyword_weight = 5.0;
};

/// value = 1/4 (B + B_w + S + D) with the default weights. Components: ngram,
/// weighted_ngram, syntax, dataflow.
SimilarityScore codebleu(std::string_view candidate_code, std::string_view reference_code,
                         const CodeBleuWeights& weights = {});

/// Labeled-subtree overlap: matched candidate subtrees / reference subtrees
/// (multiset, clipped).
double syntax_match(std::string_view candidate_code, std::string_view reference_code);

/// Jaccard overlap of def-use edge sets; 1 when both are empty.
double dataflow_match(std::string_view candidate_code, std::string_view reference_code);

// -- embedding F1 ----------------------------------------------------------------

/// Maps tokens to unit-norm vectors of a fixed dimension.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> tokens) const = 0;
  virtual std::size_t dimension() const = 0;
  /// False when calls must be serialized by the caller.
  virtual bool concurrent_safe() const { return true; }
};

/// Feature-hashed character 3-grams of "#token#", counted and unit-normalized.
class HashedTrigramProvider final : public EmbeddingProvider {
 public:
  explicit HashedTrigramProvider(std::size_t dimension = 256, std::uint64_t seed = 0);
  std::vector<std::vector<double>> embed(std::span<const std::string> tokens) const override;
  std::size_t dimension() const override { return dimension_; }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// POSTs {"tokens": [...]} to `url` and reads {"vectors": [[...], ...]}.
/// Returned vectors are renormalized; a zero vector or a length/dimension
/// mismatch is a MetricError.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::string base_url, std::string path, std::size_t dimension,
                          double timeout_s = 60.0);
  std::vector<std::vector<double>> embed(std::span<const std::string> tokens) const override;
  std::size_t dimension() const override { return dimension_; }

 private:
  std::string base_url_;
  std::string path_;
  std::size_t dimension_;
  double timeout_s_;
};

/// Greedy matching: P = mean over candidate tokens of the best cosine to a
/// reference token, R symmetric, value = 2PR/(P+R). Cosines clamp to [0, 1].
SimilarityScore embed_f1(std::string_view candidate, std::string_view reference,
                         const EmbeddingProvider& provider);

/// Dispatch by metric. `provider` is required for embed_f1.
SimilarityScore similarity(Metric metric, std::string_view candidate, std::string_view reference,
                           const EmbeddingProvider* provider = nullptr);

}  // namespace ace::metrics
