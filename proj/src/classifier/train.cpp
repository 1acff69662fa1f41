#include "privi/classifier/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "privi/common/error.hpp"
#include "privi/common/numfmt.hpp"
#include "privi/common/rng.hpp"
#include "privi/numerics/losses.hpp"
#include "privi/numerics/ops.hpp"
#include "privi/numerics/optim.hpp"

namespace privi::clf {

nn::Tensor sample_loss(const AttentiveClassifier& model, const Sample& sample, const std::vector<double>& class_freqs) {
  const auto& cfg = model.config();
  nn::Tensor logits = model.logits(sample.features);
  if (cfg.task == Task::single_label) {
    if (cfg.loss == LossKind::eql) return nn::equalization_loss(logits, sample.label, class_freqs, cfg.eql_lambda);
    return nn::cross_entropy(logits, sample.label);
  }
  const std::vector<double> targets(sample.labels.begin(), sample.labels.end());
  if (cfg.loss == LossKind::eql) return nn::equalization_loss_multi(logits, targets, class_freqs, cfg.eql_lambda);
  return nn::binary_cross_entropy(logits, targets);
}

std::vector<metrics::PredictionRecord> predict_all(const AttentiveClassifier& model, const FeatureSet& set) {
  std::vector<metrics::PredictionRecord> out;
  out.reserve(set.samples.size());
  for (const auto& s : set.samples) {
    metrics::PredictionRecord r;
    r.sample_id = s.sample_id;
    r.scores = model.predict(s.features);
    if (set.task == Task::single_label)
      r.label = s.label;
    else
      r.labels = s.labels;
    out.push_back(std::move(r));
  }
  return out;
}

double validation_metric(const AttentiveClassifier& model, const FeatureSet& set) {
  const auto preds = predict_all(model, set);
  if (set.task == Task::single_label) return metrics::accuracy(preds);
  const auto report = metrics::map_report(preds, set.classes);
  return report.aggregates.at("map");
}

TrainResult train_head(const ClassifierConfig& config, const FeatureSet& train, const FeatureSet* val) {
  config.validate();
  train.validate();
  require(!train.samples.empty(), "train_head: empty training set");
  require(train.classes == config.classes && train.task == config.task,
          "train_head: feature set does not match the classifier config");
  if (val) {
    val->validate();
    require(val->classes == config.classes && val->task == config.task,
            "train_head: validation set does not match the classifier config");
    require(!val->samples.empty(), "train_head: empty validation set");
  }

  TrainResult result{AttentiveClassifier::create(config), {}, std::nullopt, 0, {}};
  const auto freqs = train.class_frequencies();
  if (config.task == Task::single_label) {
    for (std::size_t c = 0; c < config.classes; ++c)
      if (freqs[c] == 0.0) result.warnings.push_back("class " + std::to_string(c) + " has no training samples");
  }

  const std::size_t n = train.samples.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = std::max<std::size_t>(1, batches * config.epochs);
  auto params = result.model.parameters();
  nn::Adam adam(params, nn::LrSchedule::warmup_cosine(config.base_lr, total_steps, config.warmup_fraction));

  std::vector<std::vector<double>> best;
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(config.seed, 0xe0c0 + epoch);
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * config.batch_size, hi = std::min(n, lo + config.batch_size);
      adam.zero_grad();
      nn::Tensor total;
      for (std::size_t i = lo; i < hi; ++i) {
        nn::Tensor l = sample_loss(result.model, train.samples[order[i]], freqs);
        total = total.defined() ? nn::add(total, l) : l;
      }
      nn::Tensor loss = nn::scale(total, 1.0 / static_cast<double>(hi - lo));
      loss.backward();
      const double lr = adam.step();
      result.history.push_back({epoch, adam.state().step, lr, loss.item(), std::nullopt});
    }
    if (val) {
      const double metric = validation_metric(result.model, *val);
      result.history.back().val_metric = metric;
      if (!result.best_val_metric || metric > *result.best_val_metric) {
        result.best_val_metric = metric;
        result.best_epoch = epoch;
        best.clear();
        for (const auto& p : params) best.emplace_back(p.data().begin(), p.data().end());
      }
    }
  }
  if (val && !best.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) std::copy(best[i].begin(), best[i].end(), params[i].mutable_data().begin());
  }
  for (auto& p : params) p.zero_grad();
  return result;
}

std::string history_to_jsonl(const std::vector<HistoryRecord>& history) {
  std::string out;
  for (const auto& h : history) {
    out += "{\"epoch\":" + std::to_string(h.epoch) + ",\"step\":" + std::to_string(h.step) +
           ",\"lr\":" + format_decimal(h.lr, 9) + ",\"train_loss\":" + format_decimal(h.train_loss) +
           ",\"val_metric\":" + (h.val_metric ? format_decimal(*h.val_metric) : std::string("null")) + "}\n";
  }
  return out;
}

}  // namespace privi::clf
