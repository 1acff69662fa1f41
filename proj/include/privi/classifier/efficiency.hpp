#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "privi/classifier/attentive.hpp"
#include "privi/classifier/feature_set.hpp"
#include "privi/metrics/report.hpp"

namespace privi::clf {

struct EfficiencyRun {
  double fraction = 0.0;
  std::size_t repeat = 0;
  std::size_t n_train = 0;
  std::size_t n_sequences = 0;
  double achieved_fraction = 0.0;
  bool deviation = false;
  double metric = 0.0;  // accuracy, or mAP for multi-label sets
};

struct EfficiencyResult {
  std::vector<EfficiencyRun> runs;
  // One point per fraction, in the order given.
  std::vector<metrics::CurvePoint> curve;

  nlohmann::ordered_json to_json() const;
};

// Trains one head per (fraction, repeat) on whole-sequence subsets of
// `train` and scores it on `test`. A fraction of 1 uses the full set once.
EfficiencyResult run_label_efficiency(const ClassifierConfig& config, const FeatureSet& train, const FeatureSet& test,
                                      std::span<const double> fractions, std::size_t repeats, std::uint64_t seed);

}  // namespace privi::clf
