#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "privi/classifier/attentive.hpp"
#include "privi/classifier/feature_set.hpp"
#include "privi/metrics/metrics.hpp"

namespace privi::clf {

// One optimizer step. val_metric is set on the last step of each epoch when
// a validation set is given.
struct HistoryRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_metric;
};

struct TrainResult {
  AttentiveClassifier model;
  std::vector<HistoryRecord> history;
  std::optional<double> best_val_metric;
  std::size_t best_epoch = 0;
  std::vector<std::string> warnings;
};

// Mini-batch Adam with linear warmup and cosine decay. With a validation set
// the weights from the epoch with the best validation metric (accuracy, or
// mAP for multi-label tasks) are returned; otherwise the final weights.
TrainResult train_head(const ClassifierConfig& config, const FeatureSet& train, const FeatureSet* val = nullptr);

// Loss of one sample under the configured loss.
nn::Tensor sample_loss(const AttentiveClassifier& model, const Sample& sample, const std::vector<double>& class_freqs);

std::vector<metrics::PredictionRecord> predict_all(const AttentiveClassifier& model, const FeatureSet& set);
// Accuracy for single-label sets, mAP for multi-label sets.
double validation_metric(const AttentiveClassifier& model, const FeatureSet& set);

std::string history_to_jsonl(const std::vector<HistoryRecord>& history);

}  // namespace privi::clf
