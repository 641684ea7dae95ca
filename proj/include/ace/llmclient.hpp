#pragma once

// Chat-completion backends and Socratic prompt assembly.
//
// Wire format (RemoteBackend), POST <base_url>/chat/completions:
//   request:  {"model": str, "messages": [{"role": str, "content": str}, ...],
//              "temperature": num, "max_tokens": int, "top_p": num?}
//   headers:  Authorization: Bearer $ACE_LLM_API_KEY (omitted when unset)
//   response: {"choices": [{"message": {"content": str}}, ...]}
// top_p is present only when a cutoff is configured.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/corpus.hpp"
#include "ace/error.hpp"

namespace ace::llm {

inline constexpr const char* kApiKeyEnv = "ACE_LLM_API_KEY";

enum class Role { system, user, assistant };
std::string to_string(Role r);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);

struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<double> top_p_cutoff;
  std::optional<std::uint64_t> seed;
  void validate() const;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Must tolerate concurrent calls.
  virtual std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) = 0;
  /// Backend identity for logs. Never shown to raters.
  virtual std::string describe() const = 0;
};

struct RemoteConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  double timeout_s = 60.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  /// Read from ACE_LLM_API_KEY when empty.
  std::string api_key;
};

nlohmann::json request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                            const GenerationParams& params);

class RemoteBackend final : public ChatBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;
  std::string describe() const override;

 private:
  RemoteConfig config_;
  std::string host_;  // scheme://host[:port]
  std::string path_;  // path prefix + /chat/completions
};

enum class MockMode {
  hashed,    // pool[h(messages, seed) mod |pool|]
  scripted,  // pool[(assistant messages so far + seed) mod |pool|]
};

/// Deterministic offline backend over a fixed response pool.
class MockBackend final : public ChatBackend {
 public:
  MockBackend(std::vector<std::string> pool, std::uint64_t seed = 0, MockMode mode = MockMode::hashed);
  /// The pool file is a JSON list of strings.
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& pool, std::uint64_t seed = 0,
                                                MockMode mode = MockMode::hashed);

  std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;
  std::string describe() const override;
  std::size_t index_for(const std::vector<ChatMessage>& messages, const GenerationParams& params) const;
  const std::vector<std::string>& pool() const noexcept { return pool_; }

 private:
  std::vector<std::string> pool_;
  std::uint64_t seed_;
  MockMode mode_;
  std::once_flag top_p_warning_;
};

/// {"kind": "mock", "pool": path, "mode": "hashed"|"scripted", "seed": int}
/// {"kind": "remote", "base_url": str, "model": str, "timeout_s": num}
/// Relative pool paths resolve against `base_dir`.
std::unique_ptr<ChatBackend> make_backend(const nlohmann::json& config, const std::filesystem::path& base_dir = {});

/// One canonical string per message list; used by the mock for hashing.
std::string canonical_messages(const std::vector<ChatMessage>& messages);

struct PromptOptions {
  /// Put the literal bug fix in the system channel.
  bool include_fix = false;
  std::size_t max_few_shots = 2;
};

/// Order: system instruction (with bug description), one system message per
/// few-shot thread, a user message with the problem metadata, then the
/// dialogue prefix. Few-shot threads on the same problem are skipped.
std::vector<ChatMessage> assemble_prompt(const corpus::Problem& problem, const std::vector<corpus::Turn>& prefix,
                                         std::span<const corpus::DialogueThread> few_shots = {},
                                         const PromptOptions& options = {});

/// Turn text with its code, if any, appended as a fenced block.
std::string render_turn(const corpus::Turn& turn);

/// Invalid-response source backed by a chat model: one criterion-specific
/// instruction per request. Candidate seeds are request.seed + variant.
class LlmInvalidGenerator final : public corpus::InvalidResponseGenerator {
 public:
  LlmInvalidGenerator(ChatBackend& backend, GenerationParams params = {});
  std::optional<std::string> generate(const corpus::InvalidRequest& request) override;

 private:
  ChatBackend& backend_;
  GenerationParams params_;
};

}  // namespace ace::llm
