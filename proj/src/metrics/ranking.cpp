#include <algorithm>
#include <cmath>
#include <numeric>

#include "privi/common/error.hpp"
#include "privi/metrics/metrics.hpp"

namespace privi::metrics {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> truth, const char* op) {
  require(scores.size() == truth.size(), std::string(op) + ": scores and truth differ in length");
  for (double s : scores) require(std::isfinite(s), std::string(op) + ": non-finite score");
  for (int t : truth) require(t == 0 || t == 1, std::string(op) + ": truth must be 0/1");
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

std::optional<double> average_precision(std::span<const double> scores, std::span<const int> truth) {
  check_inputs(scores, truth, "average_precision");
  const std::size_t npos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
  if (npos == 0) return std::nullopt;
  const auto idx = descending_order(scores);

  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (truth[idx[i]] ? tp : fp) += 1;
    const bool group_end = i + 1 == idx.size() || scores[idx[i + 1]] != scores[idx[i]];
    if (!group_end) continue;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(npos));
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

MetricReport map_report(std::span<const PredictionRecord> preds, std::size_t num_classes,
                        const std::vector<std::string>& class_names) {
  require(!preds.empty(), "map_report: no predictions");
  MetricReport rep;
  rep.task = "multi_label";
  rep.n_samples = preds.size();
  std::vector<double> scores(preds.size());
  std::vector<int> truth(preds.size());
  double ap_sum = 0.0, weighted = 0.0;
  std::size_t counted = 0, support_sum = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      require(preds[i].scores.size() == num_classes && preds[i].labels.size() == num_classes,
              "map_report: record '" + preds[i].sample_id + "' does not have " + std::to_string(num_classes) +
                  " scores and labels");
      scores[i] = preds[i].scores[c];
      truth[i] = preds[i].labels[c];
    }
    ClassMetric m;
    m.name = c < class_names.size() ? class_names[c] : "class_" + std::to_string(c);
    m.support = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
    const auto ap = average_precision(scores, truth);
    if (!ap) {
      m.excluded = true;
      rep.flags.push_back("no_positives:" + m.name);
    } else {
      m.value = *ap;
      ap_sum += *ap;
      weighted += *ap * static_cast<double>(m.support);
      support_sum += m.support;
      ++counted;
    }
    rep.per_class.push_back(std::move(m));
  }
  require(counted > 0, "map_report: no class has a positive sample");
  rep.aggregates["map"] = ap_sum / static_cast<double>(counted);
  rep.aggregates["map_w"] = weighted / static_cast<double>(support_sum);
  return rep;
}

double roc_auc(std::span<const double> scores, std::span<const int> truth) {
  check_inputs(scores, truth, "roc_auc");
  const std::size_t n = scores.size();
  const std::size_t npos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
  require(npos > 0 && npos < n, "roc_auc: both classes must be present");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (truth[idx[k]]) pos_rank_sum += avg_rank;
    i = j;
  }
  const double nneg = static_cast<double>(n - npos), np = static_cast<double>(npos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nneg);
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> truth) {
  check_inputs(scores, truth, "pr_curve");
  const std::size_t npos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
  const std::size_t nneg = truth.size() - npos;
  require(npos > 0 && nneg > 0, "pr_curve: both classes must be present");
  const auto idx = descending_order(scores);
  std::vector<PrPoint> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (truth[idx[i]] ? tp : fp) += 1;
    if (i + 1 < idx.size() && scores[idx[i + 1]] == scores[idx[i]]) continue;
    PrPoint p;
    p.threshold = scores[idx[i]];
    p.predicted_positive = tp + fp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(npos);
    p.fpr = static_cast<double>(fp) / static_cast<double>(nneg);
    out.push_back(p);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace privi::metrics
