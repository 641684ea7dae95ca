#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ace/corpus.hpp"
#include "ace/text.hpp"

#ifndef ACE_FIXTURE_DIR
#error "ACE_FIXTURE_DIR must be defined by the build"
#endif

namespace ace::testing {

inline std::filesystem::path fixture(const std::string& rel = {}) {
  return rel.empty() ? std::filesystem::path(ACE_FIXTURE_DIR) : std::filesystem::path(ACE_FIXTURE_DIR) / rel;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("ace-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline const corpus::Corpus& fixture_corpus() {
  static const corpus::Corpus c = corpus::load_corpus(fixture("corpus"));
  return c;
}

// Chosen responses end with '?', rejected ones do not. Words are drawn from
// one shared vocabulary so only the question form separates the classes.
inline std::vector<corpus::PreferencePair> synthetic_pairs(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> vocab = {
      "loop",  "bone",   "hole",     "swap",  "value",   "index", "return", "case", "test",   "apples",
      "check", "line",   "variable", "print", "counter", "list",  "input",  "edge", "output", "children",
      "while", "branch", "position", "error", "result",  "step",  "code",   "set",  "first",  "last"};
  const auto& c = fixture_corpus();
  std::mt19937_64 rng(seed);
  auto sentence = [&] {
    const std::size_t len = 4 + text::uniform_index(rng, 9);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) s += ' ';
      s += vocab[text::uniform_index(rng, vocab.size())];
    }
    return s;
  };
  std::vector<corpus::PreferencePair> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& thread = c.threads[i % c.threads.size()];
    corpus::PreferencePair p;
    p.id = "synthetic/t1/" + std::to_string(i);
    p.context.problem_id = thread.problem_id;
    p.context.dialogue_prefix = {thread.turns.front()};
    p.chosen = sentence() + "?";
    p.rejected = sentence() + ".";
    p.criterion = corpus::Criterion::irrelevant;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ace::testing
