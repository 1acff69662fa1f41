#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace privi::metrics {

// One evaluated sample. Single-label records set `label`; multi-label records
// set `labels` (0/1 per class).
struct PredictionRecord {
  std::string sample_id;
  std::vector<double> scores;
  std::optional<std::size_t> label;
  std::vector<int> labels;
};

struct ClassMetric {
  std::string name;
  double value = 0.0;  // recall (single-label) or AP (multi-label)
  std::size_t support = 0;
  bool excluded = false;  // zero support: left out of the means
};

struct MetricReport {
  std::string task;  // "single_label" or "multi_label"
  std::vector<ClassMetric> per_class;
  // {"acc", "b_acc"} or {"map", "map_w"}
  std::map<std::string, double> aggregates;
  std::size_t n_samples = 0;
  std::vector<std::string> flags;
};

// Index of the maximum; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> scores);

// Fraction of records whose argmax equals the label. Throws on empty input.
double accuracy(std::span<const PredictionRecord> preds);
// Mean of per-class recall over classes with non-zero support.
double balanced_accuracy(std::span<const PredictionRecord> preds);
MetricReport single_label_report(std::span<const PredictionRecord> preds, std::size_t num_classes,
                                 const std::vector<std::string>& class_names = {});

// All-points interpolated AP (precision made monotone from the right).
// nullopt when there are no positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const int> truth);
// Per-class AP; mAP is the plain mean and mAP_w the support-weighted mean over
// classes with at least one positive. Classes without positives are flagged.
MetricReport map_report(std::span<const PredictionRecord> preds, std::size_t num_classes = 23,
                        const std::vector<std::string>& class_names = {});

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fpr = 0.0;
  std::size_t predicted_positive = 0;
};

// Mann-Whitney rank statistic with averaged ranks for ties.
// Throws ContractError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> truth);
// One point per distinct score t (predict positive iff score >= t), in
// increasing threshold order.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> truth);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// k folds over samples, or over whole sequences when by_sequence is set.
// Every sample lands in exactly one test fold.
std::vector<Fold> kfold_splits(std::span<const std::string> sequence_ids, std::size_t k, bool by_sequence,
                               std::uint64_t seed);

struct Subset {
  double fraction = 0.0;
  std::size_t repeat = 0;
  std::vector<std::size_t> samples;     // sorted sample indices
  std::vector<std::string> sequences;   // sorted sequence ids
  double achieved_fraction = 0.0;
  bool deviation = false;  // target below the smallest sequence
};

// For each fraction and repeat, whole sequences are taken in a seeded random
// order whenever adding one moves the sample count closer to the target.
std::vector<Subset> label_efficiency_subsets(std::span<const std::string> sequence_ids,
                                             std::span<const double> fractions, std::size_t n_repeats,
                                             std::uint64_t seed);

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// mean +/- 1.96 * sample_std / sqrt(n).
Interval ci95(std::span<const double> values);

}  // namespace privi::metrics
