#include "privi/curation/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "privi/common/error.hpp"
#include "privi/numerics/losses.hpp"
#include "privi/numerics/ops.hpp"
#include "privi/numerics/optim.hpp"

namespace privi::curation {

using nn::Tensor;

RelevanceModel::RelevanceModel(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  require(input_dim > 0 && hidden_dim > 0, "relevance model dimensions must be positive");
  Rng rng(seed, 0x4e1);
  std::vector<double> w1(input_dim * hidden_dim), w2(hidden_dim);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (auto& v : w1) v = rng.normal(0.0, s1);
  for (auto& v : w2) v = rng.normal(0.0, s2);
  w1_ = Tensor::from({input_dim, hidden_dim}, std::move(w1), true);
  b1_ = Tensor::zeros({hidden_dim}, true);
  w2_ = Tensor::from({hidden_dim, 1}, std::move(w2), true);
  b2_ = Tensor::zeros({1}, true);
}

void RelevanceModel::set_threshold(double t) {
  require(t > 0.0 && t < 1.0, "relevance threshold must be in (0, 1)");
  threshold_ = t;
}

Tensor RelevanceModel::logits(const Tensor& batch, Rng* dropout_rng, double dropout) const {
  Tensor h = nn::gelu(nn::linear(batch, w1_, b1_));
  if (dropout_rng) h = nn::dropout(h, dropout, *dropout_rng, true);
  return nn::linear(h, w2_, b2_);
}

double RelevanceModel::score(std::span<const float> embedding) const {
  require(embedding.size() == input_dim_, "relevance model expects " + std::to_string(input_dim_) +
                                              "-dim embeddings, got " + std::to_string(embedding.size()));
  const auto x = Tensor::from({1, input_dim_}, std::vector<double>(embedding.begin(), embedding.end()));
  const double z = logits(x, nullptr, 0.0).item();
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

std::string RelevanceModel::to_json() const {
  auto values = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
  nlohmann::ordered_json j;
  j["kind"] = "relevance_mlp";
  j["input_dim"] = input_dim_;
  j["hidden_dim"] = hidden_dim_;
  j["threshold"] = threshold_;
  j["w1"] = values(w1_);
  j["b1"] = values(b1_);
  j["w2"] = values(w2_);
  j["b2"] = values(b2_);
  return j.dump();
}

RelevanceModel RelevanceModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  require(j.value("kind", "") == "relevance_mlp", "not a relevance model file");
  RelevanceModel m;
  m.input_dim_ = j.at("input_dim").get<std::size_t>();
  m.hidden_dim_ = j.at("hidden_dim").get<std::size_t>();
  m.threshold_ = j.at("threshold").get<double>();
  m.w1_ = Tensor::from({m.input_dim_, m.hidden_dim_}, j.at("w1").get<std::vector<double>>(), true);
  m.b1_ = Tensor::from({m.hidden_dim_}, j.at("b1").get<std::vector<double>>(), true);
  m.w2_ = Tensor::from({m.hidden_dim_, 1}, j.at("w2").get<std::vector<double>>(), true);
  m.b2_ = Tensor::from({1}, j.at("b2").get<std::vector<double>>(), true);
  return m;
}

ThresholdChoice select_threshold(std::span<const metrics::PrPoint> curve, double min_precision) {
  require(!curve.empty(), "select_threshold: empty curve");
  auto better_recall = [](const metrics::PrPoint& a, const metrics::PrPoint& b) {
    if (a.recall != b.recall) return a.recall > b.recall;
    if (a.precision != b.precision) return a.precision > b.precision;
    return a.threshold > b.threshold;
  };
  auto better_precision = [](const metrics::PrPoint& a, const metrics::PrPoint& b) {
    if (a.precision != b.precision) return a.precision > b.precision;
    if (a.recall != b.recall) return a.recall > b.recall;
    return a.threshold > b.threshold;
  };
  const metrics::PrPoint* best = nullptr;
  for (const auto& p : curve)
    if (p.precision >= min_precision && (!best || better_recall(p, *best))) best = &p;
  if (best) return {best->threshold, best->precision, best->recall, true};
  best = &curve.front();
  for (const auto& p : curve)
    if (better_precision(p, *best)) best = &p;
  return {best->threshold, best->precision, best->recall, false};
}

RelevanceTraining train_relevance(std::span<const RelevanceExample> examples, const RelevanceOptions& options) {
  require(!examples.empty(), "train_relevance: no labeled examples");
  const std::size_t dim = examples.front().embedding.size();
  require(dim > 0, "train_relevance: empty embeddings");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    require(examples[i].embedding.size() == dim, "train_relevance: embeddings differ in dimension");
    (examples[i].relevant ? pos : neg).push_back(i);
  }
  require(!pos.empty() && !neg.empty(), "train_relevance: labels contain a single class (" +
                                            std::to_string(pos.size()) + " relevant, " +
                                            std::to_string(neg.size()) + " irrelevant)");

  Rng split_rng(options.seed, 0x5b17);
  std::shuffle(pos.begin(), pos.end(), split_rng.engine());
  std::shuffle(neg.begin(), neg.end(), split_rng.engine());
  auto n_val_of = [&](std::size_t n) {
    return static_cast<std::size_t>(std::llround(options.val_fraction * static_cast<double>(n)));
  };
  const std::size_t vp = n_val_of(pos.size()), vn = n_val_of(neg.size());
  require(vp >= 1 && vp < pos.size() && vn >= 1 && vn < neg.size(),
          "train_relevance: both classes must appear in train and validation splits");
  std::vector<std::size_t> val(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(vp));
  val.insert(val.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(vn));
  std::vector<std::size_t> train(pos.begin() + static_cast<std::ptrdiff_t>(vp), pos.end());
  train.insert(train.end(), neg.begin() + static_cast<std::ptrdiff_t>(vn), neg.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());

  RelevanceModel model(dim, options.hidden_dim, options.seed);
  const std::size_t batches = (train.size() + options.batch_size - 1) / options.batch_size;
  nn::Adam adam(model.parameters(), nn::LrSchedule::warmup_cosine(options.base_lr, options.epochs * batches, 0.1));
  Rng order_rng(options.seed, 0x0de7);
  Rng dropout_rng(options.seed, 0xd209);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), order_rng.engine());
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * options.batch_size, hi = std::min(train.size(), lo + options.batch_size);
      std::vector<double> x, y;
      x.reserve((hi - lo) * dim);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto& ex = examples[train[i]];
        x.insert(x.end(), ex.embedding.begin(), ex.embedding.end());
        y.push_back(ex.relevant ? 1.0 : 0.0);
      }
      adam.zero_grad();
      auto loss = nn::binary_cross_entropy(
          model.logits(Tensor::from({hi - lo, dim}, std::move(x)), &dropout_rng, options.dropout), y);
      loss.backward();
      adam.step();
    }
  }

  RelevanceTraining out;
  auto& rep = out.report;
  rep.n_train = train.size();
  rep.n_val = val.size();
  for (std::size_t i : val) {
    rep.val_scores.push_back(model.score(examples[i].embedding));
    rep.val_truth.push_back(examples[i].relevant ? 1 : 0);
  }
  rep.pr_curve = metrics::pr_curve(rep.val_scores, rep.val_truth);
  rep.roc_auc = metrics::roc_auc(rep.val_scores, rep.val_truth);
  rep.choice = select_threshold(rep.pr_curve, options.min_precision);
  model.set_threshold(std::clamp(rep.choice.threshold, 1e-12, 1.0 - 1e-12));
  out.model = std::move(model);
  return out;
}

void filter_by_relevance(std::vector<Snippet>& snippets, const RelevanceModel& model, const EmbeddingLookup& lookup) {
  for (auto& s : snippets) {
    if (!s.kept) continue;
    const auto emb = lookup(s);
    require(emb.has_value(), "no embedding for snippet '" + s.snippet_id + "'");
    s.relevance_score = model.score(*emb);
    if (*s.relevance_score < model.threshold()) s.discard(DiscardReason::irrelevant);
  }
}

}  // namespace privi::curation
