#include "privi/classifier/attentive.hpp"

#include <cmath>

#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/numerics/ops.hpp"

namespace privi::clf {

std::string_view to_string(Task t) { return t == Task::single_label ? "single_label" : "multi_label"; }

std::string_view to_string(LossKind l) {
  switch (l) {
    case LossKind::ce: return "ce";
    case LossKind::bce: return "bce";
    case LossKind::eql: return "eql";
  }
  return "ce";
}

Task parse_task(std::string_view s) {
  if (s == "single_label") return Task::single_label;
  if (s == "multi_label") return Task::multi_label;
  throw ContractError("unknown task '" + std::string(s) + "'");
}

LossKind parse_loss(std::string_view s) {
  if (s == "ce") return LossKind::ce;
  if (s == "bce") return LossKind::bce;
  if (s == "eql") return LossKind::eql;
  throw ContractError("unknown loss '" + std::string(s) + "'");
}

void ClassifierConfig::validate() const {
  require(classes >= 2, "classifier needs at least 2 classes");
  require(layers >= 1, "classifier needs at least 1 block");
  require(width >= 1 && width <= input_dim, "projected width must be in [1, input_dim]");
  require(heads >= 1 && width % heads == 0,
          "width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
  require(base_lr > 0, "base_lr must be positive");
  require(warmup_fraction >= 0 && warmup_fraction < 1, "warmup_fraction must be in [0, 1)");
  require(batch_size >= 1, "batch_size must be positive");
  require(eql_lambda >= 0 && eql_lambda <= 1, "eql_lambda must be in [0, 1]");
  if (task == Task::single_label)
    require(loss != LossKind::bce, "bce loss needs a multi-label task");
  else
    require(loss != LossKind::ce, "ce loss needs a single-label task");
}

nlohmann::json ClassifierConfig::to_json() const {
  return {{"input_dim", input_dim}, {"width", width},
          {"layers", layers},       {"heads", heads},
          {"classes", classes},     {"task", to_string(task)},
          {"loss", to_string(loss)}, {"epochs", epochs},
          {"base_lr", base_lr},     {"warmup_fraction", warmup_fraction},
          {"batch_size", batch_size}, {"eql_lambda", eql_lambda},
          {"seed", seed}};
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
  ClassifierConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "input_dim") c.input_dim = value.get<std::size_t>();
    else if (key == "width") c.width = value.get<std::size_t>();
    else if (key == "layers") c.layers = value.get<std::size_t>();
    else if (key == "heads") c.heads = value.get<std::size_t>();
    else if (key == "classes") c.classes = value.get<std::size_t>();
    else if (key == "task") c.task = parse_task(value.get<std::string>());
    else if (key == "loss") c.loss = parse_loss(value.get<std::string>());
    else if (key == "epochs") c.epochs = value.get<std::size_t>();
    else if (key == "base_lr") c.base_lr = value.get<double>();
    else if (key == "warmup_fraction") c.warmup_fraction = value.get<double>();
    else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "eql_lambda") c.eql_lambda = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ContractError("unknown classifier config key '" + key + "'");
  }
  c.validate();
  return c;
}

namespace {

nn::Tensor gaussian(nn::Shape shape, double std, Rng& rng) {
  std::vector<double> v(nn::shape_size(shape));
  for (auto& x : v) x = rng.normal(0.0, std);
  return nn::Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

AttentiveClassifier AttentiveClassifier::create(const ClassifierConfig& config) {
  config.validate();
  Rng rng(config.seed, 0xc1a5);
  const std::size_t d = config.input_dim, w = config.width, c = config.classes;
  AttentiveClassifier m;
  m.config_ = config;
  m.ln_gamma_ = nn::Tensor::full({d}, 1.0, true);
  m.ln_beta_ = nn::Tensor::zeros({d}, true);
  m.proj_w_ = gaussian({d, w}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  m.proj_b_ = nn::Tensor::zeros({w}, true);
  m.class_tokens_ = gaussian({c, w}, 0.02, rng);
  for (std::size_t l = 0; l < config.layers; ++l) m.blocks_.push_back(nn::SelfAttentionBlock::create(w, config.heads, rng));
  m.head_v_ = gaussian({c, w}, 1.0 / std::sqrt(static_cast<double>(w)), rng);
  m.head_c_ = nn::Tensor::zeros({c}, true);
  return m;
}

nn::Tensor AttentiveClassifier::logits(const TokenFeatures& features) const {
  require(features.d == config_.input_dim, "features have dim " + std::to_string(features.d) +
                                               ", classifier expects " + std::to_string(config_.input_dim));
  require(features.n >= 1 && features.tokens.size() == features.n * features.d,
          "token array does not match n x d = " + std::to_string(features.n) + " x " + std::to_string(features.d));
  nn::Tensor x = nn::Tensor::from({features.n, features.d},
                                  std::vector<double>(features.tokens.begin(), features.tokens.end()));
  nn::Tensor projected = nn::linear(nn::layer_norm(x, ln_gamma_, ln_beta_), proj_w_, proj_b_);
  const nn::Tensor parts[] = {class_tokens_, projected};
  nn::Tensor seq = nn::concat_rows(parts);
  for (const auto& block : blocks_) seq = block.forward(seq);
  return nn::rowwise_dot(nn::slice_rows(seq, 0, config_.classes), head_v_, head_c_);
}

std::vector<double> activate(std::span<const double> logits, Task task) {
  std::vector<double> out(logits.size());
  if (task == Task::multi_label) {
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    return out;
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += out[i] = std::exp(logits[i] - mx);
  for (auto& v : out) v /= total;
  return out;
}

std::vector<double> AttentiveClassifier::predict(const TokenFeatures& features) const {
  return activate(logits(features).data(), config_.task);
}

std::vector<nn::Tensor> AttentiveClassifier::parameters() const {
  std::vector<nn::Tensor> p = {ln_gamma_, ln_beta_, proj_w_, proj_b_, class_tokens_};
  for (const auto& block : blocks_)
    for (auto& t : block.parameters()) p.push_back(t);
  p.push_back(head_v_);
  p.push_back(head_c_);
  return p;
}

std::size_t AttentiveClassifier::parameter_count() const {
  const auto p = parameters();
  return nn::count_parameters(p);
}

std::size_t AttentiveClassifier::parameter_count(const ClassifierConfig& c) {
  return 2 * c.input_dim + c.input_dim * c.width + c.width + c.layers * nn::SelfAttentionBlock::parameter_count(c.width) +
         c.classes * c.width + c.classes * (c.width + 1);
}

AttentiveClassifier AttentiveClassifier::clone() const {
  AttentiveClassifier m = *this;
  m.ln_gamma_ = ln_gamma_.clone();
  m.ln_beta_ = ln_beta_.clone();
  m.proj_w_ = proj_w_.clone();
  m.proj_b_ = proj_b_.clone();
  m.class_tokens_ = class_tokens_.clone();
  for (auto& block : m.blocks_) {
    for (auto* t : {&block.ln1_gamma, &block.ln1_beta, &block.w_qkv, &block.b_qkv, &block.w_out, &block.b_out,
                    &block.ln2_gamma, &block.ln2_beta, &block.fc1_w, &block.fc1_b, &block.fc2_w, &block.fc2_b})
      *t = t->clone();
  }
  m.head_v_ = head_v_.clone();
  m.head_c_ = head_c_.clone();
  return m;
}

}  // namespace privi::clf
