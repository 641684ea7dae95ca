#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ace/metrics.hpp"
#include "ace/text.hpp"

namespace ace::metrics {

HashedTrigramProvider::HashedTrigramProvider(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) throw MetricError("embedding dimension must be positive");
}

std::vector<std::vector<double>> HashedTrigramProvider::embed(std::span<const std::string> tokens) const {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    std::vector<double> v(dimension_, 0.0);
    const std::string padded = "#" + tok + "#";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      const auto h = text::splitmix64(text::fnv1a(std::string_view(padded).substr(i, 3)) ^ seed_);
      v[h % dimension_] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string base_url, std::string path,
                                                 std::size_t dimension, double timeout_s)
    : base_url_(std::move(base_url)), path_(std::move(path)), dimension_(dimension), timeout_s_(timeout_s) {}

std::vector<std::vector<double>> RemoteEmbeddingProvider::embed(std::span<const std::string> tokens) const {
  httplib::Client client(base_url_);
  const auto secs = static_cast<time_t>(timeout_s_);
  const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  nlohmann::json body{{"tokens", std::vector<std::string>(tokens.begin(), tokens.end())}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw MetricError("embedding request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw MetricError("embedding request returned HTTP " + std::to_string(res->status) + ": " + res->body);

  std::vector<std::vector<double>> out;
  try {
    const auto j = nlohmann::json::parse(res->body);
    out = j.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw MetricError(std::string("malformed embedding response: ") + e.what());
  }
  if (out.size() != tokens.size()) throw MetricError("embedding response has the wrong number of vectors");
  for (auto& v : out) {
    if (v.size() != dimension_) throw MetricError("embedding response has the wrong dimension");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw MetricError("embedding response contains a zero vector");
    for (double& x : v) x /= norm;
  }
  return out;
}

}  // namespace ace::metrics
