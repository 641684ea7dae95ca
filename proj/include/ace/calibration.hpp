#pragma once

// Reliability binning and expected calibration error of the reward model.
//
// Conventions:
//   - confidence = sigmoid(r(x, y_chosen) - r(x, y_rejected)); the chosen
//     response is always the ground-truth winner, so confidences below 0.5
//     are always incorrect predictions.
//   - correct = (delta > 0); ties count as incorrect.
//   - bin m (1-based) covers ((m-1)/M, m/M]; confidence 0 goes to bin 1.

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/corpus.hpp"
#include "ace/reward.hpp"

namespace ace::calibration {

inline constexpr int kDefaultBins = 10;

struct CalibrationSample {
  double confidence = 0.0;
  bool correct = false;
};

struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double acc = 0.0;   // 0 when count == 0
  double conf = 0.0;  // 0 when count == 0
};

struct CalibrationReport {
  std::vector<Bin> bins;
  double ece = 0.0;
  std::size_t n = 0;
};

/// 0-based index of the bin holding `confidence`.
std::size_t bin_index(double confidence, int m_bins);

/// Throws Error on an empty sample list, m_bins < 1, or a confidence outside
/// [0, 1].
CalibrationReport report_from_samples(std::span<const CalibrationSample> samples, int m_bins = kDefaultBins);

/// sum_m |B_m|/n * |acc_m - conf_m|, computed from the stored bins only.
double ece_from_bins(std::span<const Bin> bins, std::size_t n);

CalibrationSample sample_from_delta(double delta);

CalibrationReport calibrate(const reward::RewardModel& model, const corpus::Corpus& corpus,
                            std::span<const corpus::PreferencePair> pairs, int m_bins = kDefaultBins);

nlohmann::json to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const nlohmann::json& j);

}  // namespace ace::calibration
