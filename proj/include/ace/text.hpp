#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ace::text {

/// Trim both ends and collapse internal whitespace runs to one space. Case is
/// preserved. Used as the canonical form for duplicate detection.
std::string normalize_ws(std::string_view s);

std::string to_lower(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Tokenizer shared by the text metrics and the reward features: lowercase,
/// split on whitespace, and detach every ASCII punctuation character as its
/// own token.
std::vector<std::string> metric_tokens(std::string_view s);

/// Length of the longest common subsequence of two token sequences.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

/// Portable draws from mt19937_64. The std distributions are
/// implementation-defined; these are not, so seeded runs match across
/// toolchains.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);
double uniform_unit(std::mt19937_64& rng);

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

/// Fenced code blocks (``` ... ```) in a message, in order, without fences.
std::vector<std::string> fenced_code_blocks(std::string_view s);

}  // namespace ace::text
