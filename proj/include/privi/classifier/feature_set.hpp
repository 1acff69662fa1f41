#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "privi/classifier/attentive.hpp"
#include "privi/providers/types.hpp"

namespace privi::clf {

// One labelled miniclip view with precomputed frozen features.
struct Sample {
  std::string sample_id;
  std::string sequence_id;
  int view_id = 0;
  TokenFeatures features;
  std::size_t label = 0;    // single-label tasks
  std::vector<int> labels;  // multi-label tasks, length C
};

struct FeatureSet {
  Task task = Task::single_label;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  std::vector<std::string> sequence_ids() const;
  FeatureSet subset(const std::vector<std::size_t>& indices) const;
  // Per-class share of labels: single-label counts or multi-label positives.
  std::vector<double> class_frequencies() const;
  // Throws ContractError on inconsistent labels or token shapes.
  void validate() const;
};

// "<path>" holds a JSON header line then one metadata line per sample;
// tokens live in an embedding store at "<path>.tokens" keyed by sample id.
void save_feature_set(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet load_feature_set(const std::filesystem::path& path);

// Synthetic frozen-feature task. Each class has a mean token direction; every
// sample carries the direction of its class(es) in `informative_tokens`
// randomly chosen token slots, on top of per-token noise and a per-sequence
// nuisance offset.
struct SyntheticTaskOptions {
  Task task = Task::single_label;
  std::size_t classes = 4;
  std::size_t sequences = 50;
  std::size_t samples_per_sequence = 4;
  std::size_t tokens = 8;
  std::size_t dim = 32;
  std::size_t informative_tokens = 8;
  double signal = 5.0;
  double noise = 1.0;
  double sequence_noise = 0.5;
  // Multi-label: chance that each class is present.
  double positive_rate = 0.3;
  // Sequences share one label in single-label tasks.
  std::uint64_t seed = 0;
  // Sets with one seed and different splits share class directions but draw
  // disjoint samples.
  std::size_t split = 0;
};

FeatureSet make_synthetic_task(const SyntheticTaskOptions& options);

}  // namespace privi::clf
