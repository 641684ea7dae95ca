#include "ace/calibration.hpp"

#include <algorithm>
#include <cmath>

namespace ace::calibration {

std::size_t bin_index(double confidence, int m_bins) {
  const double M = m_bins;
  auto m = static_cast<long>(std::ceil(confidence * M));
  // ceil(c*M) can land one bin off when c*M rounds across an integer.
  if (m >= 1 && confidence <= (m - 1) / M) --m;
  if (m < static_cast<long>(m_bins) && confidence > m / M) ++m;
  m = std::clamp<long>(m, 1, m_bins);
  return static_cast<std::size_t>(m - 1);
}

double ece_from_bins(std::span<const Bin> bins, std::size_t n) {
  if (n == 0) return 0.0;
  double ece = 0.0;
  for (const auto& b : bins)
    if (b.count) ece += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.acc - b.conf);
  return ece;
}

CalibrationReport report_from_samples(std::span<const CalibrationSample> samples, int m_bins) {
  if (m_bins < 1) throw Error("number of bins must be at least 1");
  if (samples.empty()) throw Error("calibration needs at least one sample");
  CalibrationReport r;
  r.n = samples.size();
  r.bins.resize(static_cast<std::size_t>(m_bins));
  std::vector<double> conf_sum(r.bins.size(), 0.0);
  std::vector<std::size_t> correct(r.bins.size(), 0);
  for (const auto& s : samples) {
    if (!(s.confidence >= 0.0 && s.confidence <= 1.0))
      throw Error("confidence outside [0, 1]: " + std::to_string(s.confidence));
    const auto k = bin_index(s.confidence, m_bins);
    ++r.bins[k].count;
    conf_sum[k] += s.confidence;
    correct[k] += s.correct;
  }
  for (std::size_t k = 0; k < r.bins.size(); ++k) {
    auto& b = r.bins[k];
    b.lo = static_cast<double>(k) / m_bins;
    b.hi = static_cast<double>(k + 1) / m_bins;
    if (b.count) {
      b.acc = static_cast<double>(correct[k]) / static_cast<double>(b.count);
      b.conf = conf_sum[k] / static_cast<double>(b.count);
    }
  }
  r.ece = ece_from_bins(r.bins, r.n);
  return r;
}

CalibrationSample sample_from_delta(double delta) { return {reward::sigmoid(delta), delta > 0.0}; }

CalibrationReport calibrate(const reward::RewardModel& model, const corpus::Corpus& corpus,
                            std::span<const corpus::PreferencePair> pairs, int m_bins) {
  if (pairs.empty()) throw Error("calibration needs at least one held-out pair");
  std::vector<CalibrationSample> samples;
  samples.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto ctx = reward::context_for(corpus, p);
    samples.push_back(sample_from_delta(model.score(ctx, p.chosen) - model.score(ctx, p.rejected)));
  }
  return report_from_samples(samples, m_bins);
}

nlohmann::json to_json(const CalibrationReport& r) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"acc", b.acc}, {"conf", b.conf}});
  return {{"conventions",
           {{"confidence", "sigmoid(score(chosen) - score(rejected))"},
            {"correct", "score(chosen) - score(rejected) > 0; ties count as incorrect"},
            {"binning", "((m-1)/M, m/M], confidence 0 in bin 1"},
            {"note", "chosen is always the labeled winner, so confidence < 0.5 is always incorrect"}}},
          {"bins", bins},
          {"ece", r.ece},
          {"n", r.n}};
}

CalibrationReport report_from_json(const nlohmann::json& j) {
  CalibrationReport r;
  try {
    r.n = j.at("n").get<std::size_t>();
    r.ece = j.at("ece").get<double>();
    for (const auto& b : j.at("bins"))
      r.bins.push_back({b.at("lo").get<double>(), b.at("hi").get<double>(), b.at("count").get<std::size_t>(),
                        b.at("acc").get<double>(), b.at("conf").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed calibration report: ") + e.what());
  }
  return r;
}

}  // namespace ace::calibration
