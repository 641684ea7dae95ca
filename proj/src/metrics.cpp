#include "ace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "ace/codeparse.hpp"
#include "ace/text.hpp"

namespace ace::metrics {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::bleu4: return "bleu4";
    case Metric::rougeL: return "rougeL";
    case Metric::codebleu: return "codebleu";
    case Metric::embed_f1: return "embed_f1";
  }
  return "bleu4";
}

std::optional<Metric> parse_metric(std::string_view s) {
  for (auto m : {Metric::bleu4, Metric::rougeL, Metric::codebleu, Metric::embed_f1})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

std::vector<Metric> parse_metric_list(std::string_view s) {
  std::vector<Metric> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    auto name = text::normalize_ws(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos));
    if (!name.empty()) {
      auto m = parse_metric(name);
      if (!m) throw Error("unknown metric '" + name + "'");
      if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw Error("metric list is empty");
  return out;
}

namespace {

using NgramCounts = std::unordered_map<std::string, std::pair<std::size_t, double>>;  // count, weight

NgramCounts count_ngrams(std::span<const std::string> toks, std::size_t n, const TokenWeight& weight) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    double w = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += toks[i + k];
      w += weight ? weight(toks[i + k]) : 1.0;
    }
    auto& slot = counts[key];
    slot.first += 1;
    slot.second = w / static_cast<double>(n);
  }
  return counts;
}

SimilarityScore empty_score(Metric m) {
  SimilarityScore s;
  s.metric = m;
  s.value = 0.0;
  s.empty_input = true;
  return s;
}

}  // namespace

SimilarityScore bleu4_tokens(std::span<const std::string> cand, std::span<const std::string> ref,
                             const TokenWeight& weight) {
  if (cand.empty() || ref.empty()) return empty_score(Metric::bleu4);
  SimilarityScore s;
  s.metric = Metric::bleu4;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto c = count_ngrams(cand, n, weight);
    const auto r = count_ngrams(ref, n, weight);
    double total = 0.0, matched = 0.0;
    for (const auto& [key, cw] : c) {
      total += cw.second * static_cast<double>(cw.first);
      auto it = r.find(key);
      if (it != r.end()) matched += cw.second * static_cast<double>(std::min(cw.first, it->second.first));
    }
    const double p = matched > 0.0 ? matched / total : (matched + kBleuEpsilon) / (total + kBleuEpsilon);
    s.components["p" + std::to_string(n)] = p;
    log_sum += std::log(p);
  }
  const double c_len = static_cast<double>(cand.size());
  const double r_len = static_cast<double>(ref.size());
  const double bp = c_len >= r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  s.components["bp"] = bp;
  s.components["candidate_length"] = c_len;
  s.components["reference_length"] = r_len;
  s.value = std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
  return s;
}

SimilarityScore bleu4(std::string_view candidate, std::string_view reference) {
  const auto ref = text::metric_tokens(reference);
  if (ref.empty()) throw MetricError("bleu4: reference is empty");
  const auto cand = text::metric_tokens(candidate);
  return bleu4_tokens(cand, ref);
}

SimilarityScore rougeL(std::string_view candidate, std::string_view reference) {
  const auto cand = text::metric_tokens(candidate);
  const auto ref = text::metric_tokens(reference);
  if (cand.empty() || ref.empty()) return empty_score(Metric::rougeL);
  SimilarityScore s;
  s.metric = Metric::rougeL;
  const double l = static_cast<double>(text::lcs_length(cand, ref));
  const double p = l / static_cast<double>(cand.size());
  const double r = l / static_cast<double>(ref.size());
  s.components["lcs"] = l;
  s.components["precision"] = p;
  s.components["recall"] = r;
  s.value = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return s;
}

namespace {

void collect_subtrees(const codeparse::SketchNode& node, std::map<std::string, std::size_t>& out) {
  out[node.serialize()] += 1;
  for (const auto& c : node.children) collect_subtrees(c, out);
}

}  // namespace

double syntax_match(std::string_view candidate_code, std::string_view reference_code) {
  std::map<std::string, std::size_t> cand, ref;
  collect_subtrees(codeparse::sketch(candidate_code), cand);
  collect_subtrees(codeparse::sketch(reference_code), ref);
  std::size_t total = 0, matched = 0;
  for (const auto& [key, n] : ref) {
    total += n;
    auto it = cand.find(key);
    if (it != cand.end()) matched += std::min(n, it->second);
  }
  return total ? static_cast<double>(matched) / static_cast<double>(total) : 0.0;
}

double dataflow_match(std::string_view candidate_code, std::string_view reference_code) {
  const auto a = codeparse::defuse(candidate_code);
  const auto b = codeparse::defuse(reference_code);
  if (a.empty() && b.empty()) return 1.0;
  std::vector<codeparse::DefUseEdge> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const double uni = static_cast<double>(a.size() + b.size() - common.size());
  return static_cast<double>(common.size()) / uni;
}

SimilarityScore codebleu(std::string_view candidate_code, std::string_view reference_code,
                         const CodeBleuWeights& w) {
  const auto& profile = codeparse::LanguageProfile::python_like();
  const auto cand = codeparse::surface_tokens(codeparse::tokenize(candidate_code, profile));
  if (cand.empty()) return empty_score(Metric::codebleu);
  const auto ref = codeparse::surface_tokens(codeparse::tokenize(reference_code, profile));

  SimilarityScore s;
  s.metric = Metric::codebleu;
  const double ngram = bleu4_tokens(cand, ref).value;
  const double kw = w.keyword_weight;
  const double weighted =
      bleu4_tokens(cand, ref, [&](const std::string& t) { return profile.is_keyword(t) ? kw : 1.0; }).value;
  const double syntax = syntax_match(candidate_code, reference_code);
  const double flow = dataflow_match(candidate_code, reference_code);
  s.components["ngram"] = ngram;
  s.components["weighted_ngram"] = weighted;
  s.components["syntax"] = syntax;
  s.components["dataflow"] = flow;
  s.value = std::clamp(w.ngram * ngram + w.weighted_ngram * weighted + w.syntax * syntax + w.dataflow * flow,
                       0.0, 1.0);
  return s;
}

SimilarityScore embed_f1(std::string_view candidate, std::string_view reference,
                         const EmbeddingProvider& provider) {
  const auto cand = text::metric_tokens(candidate);
  const auto ref = text::metric_tokens(reference);
  if (cand.empty() || ref.empty()) return empty_score(Metric::embed_f1);
  const auto cv = provider.embed(cand);
  const auto rv = provider.embed(ref);
  if (cv.size() != cand.size() || rv.size() != ref.size())
    throw MetricError("embedding provider returned the wrong number of vectors");
  const std::size_t d = provider.dimension();
  for (const auto* set : {&cv, &rv})
    for (const auto& v : *set)
      if (v.size() != d) throw MetricError("embedding provider returned a vector of the wrong dimension");

  std::vector<double> best_c(cand.size(), 0.0), best_r(ref.size(), 0.0);
  for (std::size_t i = 0; i < cv.size(); ++i) {
    for (std::size_t j = 0; j < rv.size(); ++j) {
      double dot = 1.0;
      // Identical tokens embed identically; skip the rounding of v.v.
      if (cand[i] != ref[j]) {
        dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += cv[i][k] * rv[j][k];
        dot = std::clamp(dot, 0.0, 1.0);
      }
      best_c[i] = std::max(best_c[i], dot);
      best_r[j] = std::max(best_r[j], dot);
    }
  }
  SimilarityScore s;
  s.metric = Metric::embed_f1;
  double p = 0.0, r = 0.0;
  for (double x : best_c) p += x;
  for (double x : best_r) r += x;
  p /= static_cast<double>(best_c.size());
  r /= static_cast<double>(best_r.size());
  s.components["precision"] = p;
  s.components["recall"] = r;
  s.value = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return s;
}

SimilarityScore similarity(Metric metric, std::string_view candidate, std::string_view reference,
                           const EmbeddingProvider* provider) {
  switch (metric) {
    case Metric::bleu4: return bleu4(candidate, reference);
    case Metric::rougeL: return rougeL(candidate, reference);
    case Metric::codebleu: return codebleu(candidate, reference);
    case Metric::embed_f1:
      if (!provider) throw MetricError("embed_f1 requires an embedding provider");
      return embed_f1(candidate, reference, *provider);
  }
  throw MetricError("unknown metric");
}

}  // namespace ace::metrics
