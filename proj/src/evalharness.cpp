#include "ace/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <thread>

#include "ace/text.hpp"

namespace ace::eval {

using metrics::Metric;

// -- sources -----------------------------------------------------------------------

PregeneratedSource::PregeneratedSource(
    std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> utterances, std::string label)
    : utterances_(std::move(utterances)), label_(std::move(label)) {}

std::unique_ptr<PregeneratedSource> PregeneratedSource::from_file(const std::filesystem::path& path) {
  const auto j = corpus::read_json_file(path);
  std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> out;
  try {
    for (const auto& u : j.at("utterances")) {
      auto key = std::make_pair(u.at("thread_id").get<std::string>(), u.at("turn_idx").get<std::size_t>());
      if (out.count(key))
        throw Error(path.string() + ": duplicate entry for " + key.first + " turn " + std::to_string(key.second));
      out.emplace(std::move(key), u.at("generated").get<std::vector<std::string>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": malformed utterance file: " + e.what());
  }
  return std::make_unique<PregeneratedSource>(std::move(out), "pregenerated:" + path.filename().string());
}

std::vector<std::string> PregeneratedSource::generate(const corpus::Problem&, const corpus::DialogueThread& thread,
                                                      std::size_t turn_idx) {
  auto it = utterances_.find({thread.id, turn_idx});
  if (it == utterances_.end() || it->second.empty())
    throw Error("no generated utterance for " + thread.id + " turn " + std::to_string(turn_idx));
  return it->second;
}

BackendSource::BackendSource(llm::ChatBackend& backend, const reward::RewardModel* model,
                             align::BestOfNConfig config, std::vector<corpus::DialogueThread> few_shots,
                             llm::PromptOptions prompt_options)
    : backend_(backend),
      model_(model),
      config_(config),
      few_shots_(std::move(few_shots)),
      prompt_options_(prompt_options) {
  config_.validate();
}

std::vector<std::string> BackendSource::generate(const corpus::Problem& problem, const corpus::DialogueThread& thread,
                                                 std::size_t turn_idx) {
  reward::DialogueContext ctx{problem, {thread.turns.begin(), thread.turns.begin() + static_cast<long>(turn_idx)}};
  if (model_) return {align::best_of_n(backend_, *model_, ctx, config_, few_shots_, prompt_options_).chosen};
  const auto prompt = llm::assemble_prompt(problem, ctx.prefix, few_shots_, prompt_options_);
  return {backend_.complete(prompt, config_.params_for(0))};
}

std::string BackendSource::describe() const {
  return backend_.describe() + (model_ ? "+best_of_" + std::to_string(config_.n) : "");
}

// -- graphs ------------------------------------------------------------------------

namespace {

std::string joined_code(std::string_view s) {
  std::string out;
  for (const auto& block : text::fenced_code_blocks(s)) {
    if (!out.empty()) out += "\n";
    out += block;
  }
  return out;
}

}  // namespace

matching::WeightedBipartiteGraph build_graph(Metric metric, std::span<const std::string> generated,
                                             std::span<const std::string> references,
                                             const metrics::EmbeddingProvider* provider, bool* fallback) {
  matching::WeightedBipartiteGraph g(generated.size(), references.size());
  bool fell_back = false;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    for (std::size_t j = 0; j < references.size(); ++j) {
      double w;
      if (metric == Metric::codebleu) {
        const auto gc = joined_code(generated[i]);
        const auto rc = joined_code(references[j]);
        if (!gc.empty() && !rc.empty()) {
          w = metrics::codebleu(gc, rc).value;
        } else {
          fell_back = true;
          w = metrics::bleu4(generated[i], references[j]).value;
        }
      } else {
        w = metrics::similarity(metric, generated[i], references[j], provider).value;
      }
      g.set_weight(i, j, std::clamp(w, 0.0, 1.0));
    }
  }
  if (fallback) *fallback = fell_back;
  return g;
}

std::map<Metric, Aggregate> aggregate(std::span<const TurnResult> turns, std::span<const Metric> metric_set) {
  std::map<Metric, Aggregate> out;
  for (Metric m : metric_set) {
    Aggregate a;
    for (const auto& t : turns) {
      if (t.error) continue;
      auto it = t.metrics.find(m);
      if (it == t.metrics.end()) continue;
      a.tp += it->second.report.tp;
      a.left += static_cast<double>(t.generated.size());
      a.right += static_cast<double>(t.references.size());
    }
    matching::MatchReport r;
    r.tp = a.tp;
    matching::finalize_report(r, a.left, a.right);
    a.precision = r.precision;
    a.recall = r.recall;
    a.f1 = r.f1;
    out[m] = a;
  }
  return out;
}

EvalRun evaluate(const corpus::Corpus& corpus, UtteranceSource& source, std::span<const Metric> metric_set,
                 const metrics::EmbeddingProvider* provider, const EvalOptions& options) {
  if (metric_set.empty()) throw Error("at least one metric is required");
  for (Metric m : metric_set)
    if (m == Metric::embed_f1 && !provider) throw Error("embed_f1 needs an embedding provider");

  EvalRun run;
  run.corpus_ref = options.corpus_ref;
  run.backend_desc = source.describe();
  run.metric_set.assign(metric_set.begin(), metric_set.end());

  // Generation runs serially; backends may hold their own concurrency.
  for (const auto& thread : corpus.threads) {
    const auto* problem = corpus.find_problem(thread.problem_id);
    if (!problem) throw Error("thread '" + thread.id + "' references unknown problem '" + thread.problem_id + "'");
    for (std::size_t idx : thread.assistant_turn_indices()) {
      TurnResult t;
      t.thread_id = thread.id;
      t.turn_idx = idx;
      if (auto it = thread.references.find(idx); it != thread.references.end()) t.references = it->second.all();
      try {
        t.generated = source.generate(*problem, thread, idx);
        if (t.generated.empty()) throw Error("generator returned no utterances");
      } catch (const std::exception& e) {
        t.error = e.what();
        t.generated.clear();
        run.partial = true;
      }
      run.per_turn.push_back(std::move(t));
    }
  }

  auto score_turn = [&](TurnResult& t) {
    if (t.error) return;
    for (Metric m : metric_set) {
      MetricTurnReport r;
      r.report = matching::max_weight_match(build_graph(m, t.generated, t.references, provider, &r.fallback));
      t.metrics[m] = std::move(r);
    }
  };

  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  if (provider && !provider->concurrent_safe()) workers = 1;
  if (workers <= 1 || run.per_turn.size() < 2) {
    for (auto& t : run.per_turn) score_turn(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < run.per_turn.size(); i = next++) score_turn(run.per_turn[i]);
      }));
    for (auto& f : pool) f.get();
  }

  run.aggregate = aggregate(run.per_turn, metric_set);
  return run;
}

nlohmann::json to_json(const EvalRun& run) {
  nlohmann::json metric_names = nlohmann::json::array();
  for (Metric m : run.metric_set) metric_names.push_back(metrics::to_string(m));
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : run.per_turn) {
    nlohmann::json per_metric = nlohmann::json::object();
    for (const auto& [m, r] : t.metrics) {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& [l, rr] : r.report.pairs) pairs.push_back({l, rr});
      per_metric[metrics::to_string(m)] = {{"pairs", pairs},         {"tp", r.report.tp},
                                           {"fp", r.report.fp},       {"fn", r.report.fn},
                                           {"precision", r.report.precision}, {"recall", r.report.recall},
                                           {"f1", r.report.f1},       {"fallback", r.fallback}};
    }
    nlohmann::json e{{"thread_id", t.thread_id},
                     {"turn_idx", t.turn_idx},
                     {"generated", t.generated},
                     {"references", t.references},
                     {"metrics", per_metric}};
    e["error"] = t.error ? nlohmann::json(*t.error) : nlohmann::json(nullptr);
    turns.push_back(std::move(e));
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [m, a] : run.aggregate)
    agg[metrics::to_string(m)] = {{"tp", a.tp},         {"left", a.left},     {"right", a.right},
                                  {"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
  return {{"corpus_ref", run.corpus_ref}, {"backend_desc", run.backend_desc}, {"metric_set", metric_names},
          {"per_turn", turns},            {"aggregate", agg},                 {"partial", run.partial}};
}

}  // namespace ace::eval
