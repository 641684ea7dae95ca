#include "ace/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ace/text.hpp"

namespace ace::reward {

namespace {

bool is_word(const std::string& t) {
  return std::any_of(t.begin(), t.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

void add_block(std::map<std::uint32_t, double>& block, std::vector<std::pair<std::uint32_t, double>>& out) {
  double norm = 0.0;
  for (const auto& [_, v] : block) norm += v * v;
  if (norm <= 0.0) return;
  norm = std::sqrt(norm);
  for (const auto& [k, v] : block) out.emplace_back(k, v / norm);
}

std::uint32_t hashed_slot(std::string_view key, std::uint64_t seed) {
  return static_cast<std::uint32_t>(text::splitmix64(text::fnv1a(key) ^ seed) % kHashedSlots);
}

double overlap_ratio(const std::vector<std::string>& response, const std::vector<std::string>& other) {
  if (response.empty() || other.empty()) return 0.0;
  return static_cast<double>(text::lcs_length(response, other)) / static_cast<double>(response.size());
}

const std::set<std::string>& question_words() {
  static const std::set<std::string> words = {"what", "how", "why", "where", "when", "which", "who",
                                              "can",  "could", "do", "does", "did",  "is",    "are",
                                              "would", "should", "have", "has", "will", "whose"};
  return words;
}

}  // namespace

FeatureVector::FeatureVector(std::vector<std::pair<std::uint32_t, double>> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().first == e.first) entries_.back().second += e.second;
    else entries_.push_back(e);
  }
}

double FeatureVector::get(std::size_t index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, std::size_t k) { return e.first < k; });
  return it != entries_.end() && it->first == index ? it->second : 0.0;
}

double FeatureVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (const auto& [i, v] : entries_) s += v * dense[i];
  return s;
}

FeatureVector FeatureVector::minus(const FeatureVector& other) const {
  auto merged = entries_;
  for (const auto& [i, v] : other.entries_) merged.emplace_back(i, -v);
  return FeatureVector(std::move(merged));
}

FeatureVector featurize(const DialogueContext& ctx, std::string_view response, const FeatureConfig& config) {
  const auto toks = text::metric_tokens(response);
  std::vector<std::pair<std::uint32_t, double>> out;

  std::map<std::uint32_t, double> ngrams;
  for (int n : config.ngram_orders) {
    if (n <= 0) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
      std::string key = "n" + std::to_string(n) + ":";
      for (int k = 0; k < n; ++k) key += (k ? "\x1f" : "") + toks[i + k];
      ngrams[hashed_slot(key, config.hash_seed)] += 1.0;
    }
  }
  add_block(ngrams, out);

  std::string last_student;
  for (auto it = ctx.prefix.rbegin(); it != ctx.prefix.rend(); ++it) {
    if (it->speaker == corpus::Speaker::student) {
      last_student = it->text;
      break;
    }
  }
  const auto student_toks = text::metric_tokens(last_student);

  if (config.cross_grams) {
    constexpr std::size_t kCap = 64;
    std::set<std::string> cw, rw;
    for (const auto& t : student_toks)
      if (is_word(t) && cw.size() < kCap) cw.insert(t);
    for (const auto& t : toks)
      if (is_word(t) && rw.size() < kCap) rw.insert(t);
    std::map<std::uint32_t, double> cross;
    for (const auto& c : cw)
      for (const auto& r : rw) cross[hashed_slot("x:" + c + "\x1f" + r, config.hash_seed)] += 1.0;
    add_block(cross, out);
  }

  auto set = [&](Slot s, double v) {
    if (v != 0.0) out.emplace_back(static_cast<std::uint32_t>(slot_index(s)), v);
  };

  const auto trimmed = text::normalize_ws(response);
  set(Slot::ends_with_question, !trimmed.empty() && trimmed.back() == '?' ? 1.0 : 0.0);
  set(Slot::contains_code_fence, response.find("```") != std::string_view::npos ? 1.0 : 0.0);
  const auto len = toks.size();
  set(len <= 8 ? Slot::length_short : len <= 20 ? Slot::length_medium : len <= 50 ? Slot::length_long
                                                                                   : Slot::length_very_long,
      1.0);
  set(Slot::bug_fix_overlap, overlap_ratio(toks, text::metric_tokens(ctx.problem.bug_fix)));

  double repetition = 0.0;
  for (const auto& turn : ctx.prefix) {
    if (turn.speaker != corpus::Speaker::assistant) continue;
    const auto prev = text::metric_tokens(turn.text);
    if (prev.empty() || toks.empty()) continue;
    const double l = static_cast<double>(text::lcs_length(toks, prev));
    repetition = std::max(repetition, l / static_cast<double>(std::max(toks.size(), prev.size())));
  }
  set(Slot::repetition, repetition);
  set(Slot::bias, 1.0);
  set(Slot::has_question_mark, response.find('?') != std::string_view::npos ? 1.0 : 0.0);

  // Lead word of the last sentence that ends in '?'.
  double qlead = 0.0;
  if (auto q = trimmed.rfind('?'); q != std::string::npos) {
    auto start = trimmed.find_last_of(".!?", q == 0 ? 0 : q - 1);
    start = (start == std::string::npos || start >= q) ? 0 : start + 1;
    const auto sentence = text::metric_tokens(std::string_view(trimmed).substr(start, q - start));
    if (!sentence.empty() && question_words().count(sentence.front())) qlead = 1.0;
  }
  set(Slot::question_word_lead, qlead);

  std::set<std::string> context_words;
  for (const auto& t : text::metric_tokens(ctx.problem.statement)) context_words.insert(t);
  for (const auto& t : student_toks) context_words.insert(t);
  std::set<std::string> code_words;
  for (const auto& t : text::metric_tokens(ctx.problem.buggy_code))
    if (is_word(t)) code_words.insert(t);
  std::size_t content = 0, in_context = 0, in_code = 0;
  for (const auto& t : toks) {
    if (!is_word(t) || t.size() < 3) continue;
    ++content;
    in_context += context_words.count(t);
    in_code += code_words.count(t);
  }
  if (content) {
    set(Slot::context_overlap, static_cast<double>(in_context) / static_cast<double>(content));
    set(Slot::code_identifier_overlap, static_cast<double>(in_code) / static_cast<double>(content));
  }
  return FeatureVector(std::move(out));
}

// -- config ------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be positive");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error("l2 must be non-negative");
}

TrainConfig TrainConfig::toy() { return {}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.learning_rate = 5e-6;
  c.batch_size = 64;
  c.epochs = 10;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"seed", c.seed},
                     {"l2", c.l2}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  corpus::require_known_keys(j, {"preset", "learning_rate", "batch_size", "epochs", "seed", "l2"},
                             "invalid training config");
  try {
    if (j.contains("preset")) {
      const auto p = j.at("preset").get<std::string>();
      if (p == "paper") c = TrainConfig::paper();
      else if (p == "toy") c = TrainConfig::toy();
      else throw Error("unknown preset '" + p + "'");
    }
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("l2")) c.l2 = j.at("l2").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid training config: ") + e.what());
  }
  return c;
}

// -- model -------------------------------------------------------------------------

double RewardModel::score(const DialogueContext& context, std::string_view response) const {
  return score(featurize(context, response, feature_config));
}

nlohmann::json RewardModel::to_json() const {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : training_log)
    log.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"pairwise_accuracy", e.pairwise_accuracy}});
  return {{"feature_config",
           {{"ngram_orders", feature_config.ngram_orders},
            {"hash_seed", feature_config.hash_seed},
            {"cross_grams", feature_config.cross_grams}}},
          {"theta", theta},
          {"training_log", log}};
}

RewardModel RewardModel::from_json(const nlohmann::json& j) {
  RewardModel m;
  try {
    const auto& fc = j.at("feature_config");
    m.feature_config.ngram_orders = fc.at("ngram_orders").get<std::vector<int>>();
    m.feature_config.hash_seed = fc.at("hash_seed").get<std::uint64_t>();
    m.feature_config.cross_grams = fc.at("cross_grams").get<bool>();
    m.theta = j.at("theta").get<std::vector<double>>();
    for (const auto& e : j.at("training_log"))
      m.training_log.push_back(
          {e.at("epoch").get<int>(), e.at("mean_loss").get<double>(), e.at("pairwise_accuracy").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed reward model: ") + e.what());
  }
  if (m.theta.size() != kDimension)
    throw Error("reward model theta has " + std::to_string(m.theta.size()) + " entries, expected " +
                std::to_string(kDimension));
  for (double x : m.theta)
    if (!std::isfinite(x)) throw Error("reward model theta contains a non-finite value");
  return m;
}

void RewardModel::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << corpus::canonical_dump(to_json());
}

RewardModel RewardModel::load(const std::filesystem::path& path) {
  return from_json(corpus::read_json_file(path));
}

// -- loss --------------------------------------------------------------------------

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double ranking_loss(double delta) {
  // softplus(-delta)
  if (delta >= 0.0) return std::log1p(std::exp(-delta));
  return -delta + std::log1p(std::exp(delta));
}

LossAndGrad pairwise_loss(const RewardModel& model, const DialogueContext& context, std::string_view chosen,
                          std::string_view rejected, double l2) {
  const auto diff = featurize(context, chosen, model.feature_config)
                        .minus(featurize(context, rejected, model.feature_config));
  LossAndGrad out;
  out.delta = model.score(diff);
  double reg = 0.0;
  for (double t : model.theta) reg += t * t;
  out.loss = ranking_loss(out.delta) + 0.5 * l2 * reg;
  out.grad.resize(model.theta.size());
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] = l2 * model.theta[i];
  const double coef = -(1.0 - sigmoid(out.delta));
  for (const auto& [i, v] : diff.entries()) out.grad[i] += coef * v;
  return out;
}

DialogueContext context_for(const corpus::Corpus& corpus, const corpus::PreferencePair& pair) {
  const auto* problem = corpus.find_problem(pair.context.problem_id);
  if (!problem)
    throw Error("preference pair '" + pair.id + "' references unknown problem '" + pair.context.problem_id + "'");
  return {*problem, pair.context.dialogue_prefix};
}

std::vector<TrainingExample> make_examples(const corpus::Corpus& corpus,
                                           std::span<const corpus::PreferencePair> pairs,
                                           const FeatureConfig& features) {
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto ctx = context_for(corpus, p);
    out.push_back({featurize(ctx, p.chosen, features), featurize(ctx, p.rejected, features)});
  }
  return out;
}

TrainingDiverged::TrainingDiverged(int epoch)
    : Error("reward training diverged (non-finite loss) at epoch " + std::to_string(epoch)), epoch_(epoch) {}

double pairwise_accuracy(const RewardModel& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& e : examples) correct += model.score(e.chosen) > model.score(e.rejected);
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

RewardModel train(std::span<const TrainingExample> examples, const TrainConfig& config,
                  const FeatureConfig& features) {
  config.validate();
  if (examples.empty()) throw Error("reward training needs at least one preference pair");

  RewardModel model;
  model.feature_config = features;
  auto& theta = model.theta;

  std::vector<FeatureVector> diffs;
  diffs.reserve(examples.size());
  for (const auto& e : examples) diffs.push_back(e.chosen.minus(e.rejected));

  std::vector<std::size_t> order(diffs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    text::shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      // Coefficients use the pre-step theta for the whole batch.
      std::vector<double> coef(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const double delta = diffs[order[k]].dot(theta);
        coef[k - start] = -(1.0 - sigmoid(delta)) * inv;
      }
      const double shrink = 1.0 - config.learning_rate * config.l2;
      if (config.l2 != 0.0)
        for (double& t : theta) t *= shrink;
      for (std::size_t k = start; k < end; ++k)
        for (const auto& [i, v] : diffs[order[k]].entries()) theta[i] -= config.learning_rate * coef[k - start] * v;
    }

    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto& d : diffs) {
      const double delta = d.dot(theta);
      loss += ranking_loss(delta);
      correct += delta > 0.0;
    }
    loss /= static_cast<double>(diffs.size());
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
    model.training_log.push_back({epoch, loss, static_cast<double>(correct) / static_cast<double>(diffs.size())});
  }
  return model;
}

RewardModel train(const corpus::Corpus& corpus, std::span<const corpus::PreferencePair> pairs,
                  const TrainConfig& config, const FeatureConfig& features) {
  config.validate();
  const auto examples = make_examples(corpus, pairs, features);
  return train(examples, config, features);
}

// -- store -------------------------------------------------------------------------

ModelStore::ModelStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ModelStore::path_for(std::string_view name) const {
  if (name.empty() || name.find_first_of("/\\") != std::string_view::npos || name == "." || name == "..")
    throw Error("invalid model name '" + std::string(name) + "'");
  return dir_ / (std::string(name) + ".json");
}

void ModelStore::put(std::string_view name, const RewardModel& model) const { model.save(path_for(name)); }

RewardModel ModelStore::get(std::string_view name) const {
  const auto path = path_for(name);
  if (!std::filesystem::exists(path)) throw Error("no model named '" + std::string(name) + "' in " + dir_.string());
  return RewardModel::load(path);
}

std::vector<std::string> ModelStore::names() const {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(dir_)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir_))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ace::reward
