#include "ace/llmclient.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ace/text.hpp"

namespace ace::llm {

std::string to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
  j = nlohmann::json{{"role", to_string(m.role)}, {"content", m.content}};
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw Error("temperature must be >= 0");
  if (max_tokens < 1) throw Error("max_tokens must be >= 1");
  if (top_p_cutoff && !(*top_p_cutoff >= 0.0 && *top_p_cutoff < 1.0))
    throw Error("probability cutoff must lie in [0, 1)");
}

nlohmann::json request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                            const GenerationParams& params) {
  nlohmann::json body{{"model", model},
                      {"messages", messages},
                      {"temperature", params.temperature},
                      {"max_tokens", params.max_tokens}};
  if (params.top_p_cutoff) body["top_p"] = *params.top_p_cutoff;
  return body;
}

// -- remote ------------------------------------------------------------------------

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw Error("backend.base_url is not set");
  if (config_.max_attempts < 1) throw Error("backend retry attempts must be >= 1");
  if (config_.api_key.empty())
    if (const char* k = std::getenv(kApiKeyEnv)) config_.api_key = k;
  const auto scheme = config_.base_url.find("://");
  const auto slash = config_.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  host_ = config_.base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : config_.base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

std::string RemoteBackend::describe() const { return "remote:" + config_.model + "@" + config_.base_url; }

std::string RemoteBackend::complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) {
  params.validate();
  const auto body = request_body(config_.model, messages, params).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(host_);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401)
      throw AuthError(std::string("backend rejected the credentials (HTTP 401); set ") + kApiKeyEnv);
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed completion response: ") + e.what());
    }
  }
  throw BackendError("backend failed after " + std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

// -- mock --------------------------------------------------------------------------

MockBackend::MockBackend(std::vector<std::string> pool, std::uint64_t seed, MockMode mode)
    : pool_(std::move(pool)), seed_(seed), mode_(mode) {
  if (pool_.empty()) throw Error("mock backend pool is empty");
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& pool, std::uint64_t seed,
                                                    MockMode mode) {
  const auto j = corpus::read_json_file(pool);
  if (!j.is_array()) throw Error(pool.string() + ": mock pool must be a JSON list of strings");
  std::vector<std::string> items;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(pool.string() + ": mock pool must be a JSON list of strings");
    items.push_back(e.get<std::string>());
  }
  return std::make_unique<MockBackend>(std::move(items), seed, mode);
}

std::string canonical_messages(const std::vector<ChatMessage>& messages) {
  return nlohmann::json(messages).dump();
}

std::size_t MockBackend::index_for(const std::vector<ChatMessage>& messages, const GenerationParams& params) const {
  const std::uint64_t seed = seed_ + params.seed.value_or(0);
  if (mode_ == MockMode::scripted) {
    std::uint64_t assistant = 0;
    for (const auto& m : messages) assistant += m.role == Role::assistant;
    return static_cast<std::size_t>((assistant + seed) % pool_.size());
  }
  return static_cast<std::size_t>(text::splitmix64(text::fnv1a(canonical_messages(messages)) ^ seed) %
                                  pool_.size());
}

std::string MockBackend::complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) {
  params.validate();
  if (params.top_p_cutoff)
    std::call_once(top_p_warning_, [] { spdlog::warn("mock backend ignores the probability cutoff"); });
  return pool_[index_for(messages, params)];
}

std::string MockBackend::describe() const {
  return std::string("mock:") + (mode_ == MockMode::scripted ? "scripted" : "hashed") + ":" +
         std::to_string(pool_.size());
}

std::unique_ptr<ChatBackend> make_backend(const nlohmann::json& config, const std::filesystem::path& base_dir) {
  try {
    const auto kind = config.at("kind").get<std::string>();
    if (kind == "mock") {
      corpus::require_known_keys(config, {"kind", "pool", "mode", "seed"}, "mock backend config");
      std::filesystem::path pool = config.at("pool").get<std::string>();
      if (pool.is_relative() && !base_dir.empty()) pool = base_dir / pool;
      const auto mode_name = config.value("mode", std::string("hashed"));
      MockMode mode;
      if (mode_name == "hashed") mode = MockMode::hashed;
      else if (mode_name == "scripted") mode = MockMode::scripted;
      else throw Error("unknown mock mode '" + mode_name + "'");
      return MockBackend::from_file(pool, config.value("seed", std::uint64_t{0}), mode);
    }
    if (kind == "remote") {
      corpus::require_known_keys(config, {"kind", "base_url", "model", "timeout_s", "max_attempts", "initial_backoff_ms"},
                                 "remote backend config");
      RemoteConfig rc;
      rc.base_url = config.at("base_url").get<std::string>();
      rc.model = config.at("model").get<std::string>();
      rc.timeout_s = config.value("timeout_s", 60.0);
      rc.max_attempts = config.value("max_attempts", 3);
      rc.initial_backoff = std::chrono::milliseconds(config.value("initial_backoff_ms", 250));
      return std::make_unique<RemoteBackend>(std::move(rc));
    }
    throw Error("unknown backend kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid backend config: ") + e.what());
  }
}

// -- prompt ------------------------------------------------------------------------

namespace {

constexpr const char* kInstruction =
    "You are a Socratic programming tutor. A student is debugging the code below. "
    "Never reveal the fix or write corrected code. Reply with one guiding question, "
    "optionally preceded by a short hint, that leads the student to find the bug. "
    "Think step by step about what the student currently understands before you write "
    "the question, but output only the question.";

void redact(std::string& s, const std::string& secret) {
  if (secret.empty()) return;
  for (auto pos = s.find(secret); pos != std::string::npos; pos = s.find(secret, pos)) {
    s.replace(pos, secret.size(), "[withheld]");
    pos += 10;
  }
}

}  // namespace

std::string render_turn(const corpus::Turn& turn) {
  if (!turn.code) return turn.text;
  return turn.text + "\n\n```\n" + *turn.code + "\n```";
}

std::vector<ChatMessage> assemble_prompt(const corpus::Problem& problem, const std::vector<corpus::Turn>& prefix,
                                         std::span<const corpus::DialogueThread> few_shots,
                                         const PromptOptions& options) {
  std::vector<ChatMessage> out;
  std::string system = kInstruction;
  if (!problem.bug_description.empty()) system += "\n\nKnown bug (do not disclose): " + problem.bug_description;
  if (options.include_fix && !problem.bug_fix.empty()) system += "\nFix (do not disclose): " + problem.bug_fix;
  out.push_back({Role::system, system});

  std::size_t used = 0;
  for (const auto& thread : few_shots) {
    if (used == options.max_few_shots) break;
    if (thread.problem_id == problem.id) continue;
    std::string ex = "Example dialogue:";
    for (const auto& t : thread.turns)
      ex += std::string("\n") + (t.speaker == corpus::Speaker::student ? "Student: " : "Tutor: ") + render_turn(t);
    out.push_back({Role::system, ex});
    ++used;
  }
  if (!options.include_fix)
    for (auto& m : out) redact(m.content, problem.bug_fix);

  std::string meta = "Problem: " + problem.title + "\n\n" + problem.statement;
  if (!problem.input_spec.empty()) meta += "\n\nInput: " + problem.input_spec;
  if (!problem.output_spec.empty()) meta += "\nOutput: " + problem.output_spec;
  meta += "\n\nUnit tests:";
  for (const auto& t : problem.unit_tests) meta += "\n- input: " + t.input + " -> expected: " + t.expected;
  meta += "\n\nStudent code:\n```\n" + problem.buggy_code + "\n```";
  out.push_back({Role::user, meta});

  for (const auto& t : prefix)
    out.push_back({t.speaker == corpus::Speaker::student ? Role::user : Role::assistant, render_turn(t)});
  return out;
}

// -- invalid responses -------------------------------------------------------------

LlmInvalidGenerator::LlmInvalidGenerator(ChatBackend& backend, GenerationParams params)
    : backend_(backend), params_(params) {
  params_.validate();
}

std::optional<std::string> LlmInvalidGenerator::generate(const corpus::InvalidRequest& r) {
  std::string goal;
  switch (r.criterion) {
    case corpus::Criterion::irrelevant:
      goal = "is unrelated to this student's problem and code";
      break;
    case corpus::Criterion::repeated:
      goal = "repeats a question the tutor already asked earlier in the dialogue";
      break;
    case corpus::Criterion::direct:
      goal = "directly tells the student how to fix the bug";
      break;
    case corpus::Criterion::premature:
      goal = "jumps to the bug and its fix before the student has had a chance to reason about it";
      break;
    case corpus::Criterion::ground_truth_pairing:
      return std::nullopt;
  }
  PromptOptions opts;
  opts.include_fix = true;
  std::vector<corpus::Turn> prefix(r.thread.turns.begin(),
                                   r.thread.turns.begin() + static_cast<long>(r.turn_index));
  auto messages = assemble_prompt(r.problem, prefix, {}, opts);
  messages.front().content =
      "You generate negative training examples for a Socratic tutoring model. Write the next tutor reply so "
      "that it " + goal + ". Output only the reply.\n\nKnown bug: " + r.problem.bug_description +
      "\nFix: " + r.problem.bug_fix;
  auto params = params_;
  params.seed = r.seed + r.variant;
  auto out = backend_.complete(messages, params);
  if (text::normalize_ws(out).empty()) return std::nullopt;
  return out;
}

}  // namespace ace::llm
