#include <cmath>

#include "privi/common/error.hpp"
#include "privi/metrics/metrics.hpp"

namespace privi::metrics {
namespace {

std::size_t checked_label(const PredictionRecord& r) {
  require(r.label.has_value(), "single-label metric on record '" + r.sample_id + "' without a label");
  require(*r.label < r.scores.size(), "label out of range in record '" + r.sample_id + "'");
  for (double s : r.scores) require(std::isfinite(s), "non-finite score in record '" + r.sample_id + "'");
  return *r.label;
}

}  // namespace

std::size_t argmax(std::span<const double> scores) {
  require(!scores.empty(), "argmax of empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

double accuracy(std::span<const PredictionRecord> preds) {
  require(!preds.empty(), "accuracy: no predictions");
  std::size_t correct = 0;
  for (const auto& r : preds) correct += argmax(r.scores) == checked_label(r);
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double balanced_accuracy(std::span<const PredictionRecord> preds) {
  require(!preds.empty(), "balanced_accuracy: no predictions");
  const std::size_t c = preds.front().scores.size();
  return single_label_report(preds, c).aggregates.at("b_acc");
}

MetricReport single_label_report(std::span<const PredictionRecord> preds, std::size_t num_classes,
                                 const std::vector<std::string>& class_names) {
  require(!preds.empty(), "single_label_report: no predictions");
  std::vector<std::size_t> support(num_classes, 0), hits(num_classes, 0);
  std::size_t correct = 0;
  for (const auto& r : preds) {
    require(r.scores.size() == num_classes, "record '" + r.sample_id + "' has wrong score count");
    const auto y = checked_label(r);
    ++support[y];
    if (argmax(r.scores) == y) {
      ++hits[y];
      ++correct;
    }
  }
  MetricReport rep;
  rep.task = "single_label";
  rep.n_samples = preds.size();
  double recall_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    ClassMetric m;
    m.name = k < class_names.size() ? class_names[k] : "class_" + std::to_string(k);
    m.support = support[k];
    if (support[k] == 0) {
      m.excluded = true;
      rep.flags.push_back("zero_support:" + m.name);
    } else {
      m.value = static_cast<double>(hits[k]) / static_cast<double>(support[k]);
      recall_sum += m.value;
      ++counted;
    }
    rep.per_class.push_back(std::move(m));
  }
  rep.aggregates["acc"] = static_cast<double>(correct) / static_cast<double>(preds.size());
  rep.aggregates["b_acc"] = recall_sum / static_cast<double>(counted);
  return rep;
}

}  // namespace privi::metrics
