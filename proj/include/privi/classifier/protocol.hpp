#pragma once

#include <span>
#include <vector>

#include "privi/classifier/attentive.hpp"
#include "privi/classifier/feature_set.hpp"
#include "privi/metrics/metrics.hpp"

namespace privi::clf {

inline constexpr std::size_t kEnsembleHeads = 5;
inline constexpr std::size_t kEvalViews = 3;

// Element-wise mean of equal-length probability vectors.
std::vector<double> average_probabilities(std::span<const std::vector<double>> probs);

// Mean of every head's prediction on every view. All heads must share one
// config; throws ContractError otherwise.
std::vector<double> evaluate_protocol(std::span<const AttentiveClassifier> heads, std::span<const TokenFeatures> views);

// Groups the set's samples by miniclip_ref (one group per clip, views in
// view_id order) and scores each group with evaluate_protocol. Records carry
// the first view's sample id and labels.
std::vector<metrics::PredictionRecord> evaluate_set(std::span<const AttentiveClassifier> heads, const FeatureSet& set);

}  // namespace privi::clf
