#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "privi/common/rng.hpp"
#include "privi/curation/types.hpp"
#include "privi/metrics/metrics.hpp"
#include "privi/numerics/tensor.hpp"

namespace privi::curation {

inline constexpr double kDefaultMinPrecision = 0.90;

struct RelevanceExample {
  std::vector<float> embedding;
  bool relevant = false;
};

struct RelevanceOptions {
  std::size_t hidden_dim = 256;
  double dropout = 0.1;
  double val_fraction = 0.2;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double base_lr = 1e-3;
  double min_precision = kDefaultMinPrecision;
  std::uint64_t seed = 0;
};

// Two-layer MLP on frame embeddings: sigmoid(W2 GELU(W1 x + b1) + b2).
class RelevanceModel {
 public:
  RelevanceModel() = default;
  RelevanceModel(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  double threshold() const { return threshold_; }
  void set_threshold(double t);

  // Probability of relevance.
  double score(std::span<const float> embedding) const;
  bool relevant(std::span<const float> embedding) const { return score(embedding) >= threshold_; }

  // Logits for a batch [B x input_dim]; dropout applies only when rng is given.
  nn::Tensor logits(const nn::Tensor& batch, Rng* dropout_rng, double dropout) const;
  std::vector<nn::Tensor> parameters() const { return {w1_, b1_, w2_, b2_}; }

  std::string to_json() const;
  static RelevanceModel from_json(const std::string& text);

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  nn::Tensor w1_, b1_, w2_, b2_;
  double threshold_ = 0.5;
};

struct ThresholdChoice {
  double threshold = 0.5;
  double precision = 0.0;
  double recall = 0.0;
  bool attained = true;  // false: min_precision unreachable, fell back to max precision
};

// Highest-recall point with precision >= min_precision (ties: higher
// precision, then higher threshold). If none qualifies, the
// highest-precision point with attained = false.
ThresholdChoice select_threshold(std::span<const metrics::PrPoint> curve, double min_precision);

struct RelevanceReport {
  std::vector<metrics::PrPoint> pr_curve;
  double roc_auc = 0.0;
  ThresholdChoice choice;
  std::vector<double> val_scores;
  std::vector<int> val_truth;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
};

struct RelevanceTraining {
  RelevanceModel model;
  RelevanceReport report;
};

// Stratified train/validation split, BCE training with Adam and a
// warmup-cosine schedule, then threshold selection on the validation curve.
// Throws ContractError when either split would miss a class.
RelevanceTraining train_relevance(std::span<const RelevanceExample> examples, const RelevanceOptions& options);

using EmbeddingLookup = std::function<std::optional<std::vector<float>>(const Snippet&)>;

// Scores every kept snippet and discards (irrelevant) those below the model
// threshold. Throws ContractError if a kept snippet has no embedding.
void filter_by_relevance(std::vector<Snippet>& snippets, const RelevanceModel& model, const EmbeddingLookup& lookup);

}  // namespace privi::curation
