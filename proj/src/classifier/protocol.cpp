#include "privi/classifier/protocol.hpp"

#include <algorithm>
#include <map>

#include "privi/common/error.hpp"

namespace privi::clf {

std::vector<double> average_probabilities(std::span<const std::vector<double>> probs) {
  require(!probs.empty(), "average_probabilities: nothing to average");
  std::vector<double> out(probs[0].size(), 0.0);
  for (const auto& p : probs) {
    require(p.size() == out.size(), "average_probabilities: length mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) out[i] += p[i];
  }
  for (auto& v : out) v /= static_cast<double>(probs.size());
  return out;
}

std::vector<double> evaluate_protocol(std::span<const AttentiveClassifier> heads, std::span<const TokenFeatures> views) {
  require(!heads.empty() && !views.empty(), "evaluate_protocol: needs at least one head and one view");
  for (const auto& h : heads)
    require(h.config().input_dim == heads[0].config().input_dim && h.config().width == heads[0].config().width &&
                h.config().layers == heads[0].config().layers && h.config().heads == heads[0].config().heads &&
                h.config().classes == heads[0].config().classes && h.config().task == heads[0].config().task,
            "evaluate_protocol: heads have mismatched configs");
  std::vector<std::vector<double>> probs;
  probs.reserve(heads.size() * views.size());
  for (const auto& h : heads)
    for (const auto& v : views) probs.push_back(h.predict(v));
  return average_probabilities(probs);
}

std::vector<metrics::PredictionRecord> evaluate_set(std::span<const AttentiveClassifier> heads, const FeatureSet& set) {
  std::map<std::string, std::vector<const Sample*>> groups;
  std::vector<std::string> order;
  for (const auto& s : set.samples) {
    auto& g = groups[s.features.miniclip_ref];
    if (g.empty()) order.push_back(s.features.miniclip_ref);
    g.push_back(&s);
  }
  std::vector<metrics::PredictionRecord> out;
  for (const auto& ref : order) {
    auto& g = groups[ref];
    std::stable_sort(g.begin(), g.end(), [](const Sample* a, const Sample* b) { return a->view_id < b->view_id; });
    std::vector<TokenFeatures> views;
    for (const auto* s : g) views.push_back(s->features);
    metrics::PredictionRecord r;
    r.sample_id = g.front()->sample_id;
    r.scores = evaluate_protocol(heads, views);
    if (set.task == Task::single_label)
      r.label = g.front()->label;
    else
      r.labels = g.front()->labels;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace privi::clf
