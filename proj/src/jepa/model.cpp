#include "privi/jepa/model.hpp"

#include <cmath>

#include "privi/common/error.hpp"
#include "privi/numerics/losses.hpp"
#include "privi/numerics/ops.hpp"

namespace privi::jepa {
namespace {

nn::Tensor gaussian(nn::Shape shape, double std, Rng& rng) {
  std::vector<double> v(nn::shape_size(shape));
  for (auto& x : v) x = rng.normal(0.0, std);
  return nn::Tensor::from(std::move(shape), std::move(v), true);
}

nn::Tensor rows_of(const nn::Tensor& x, std::span<const std::size_t> idx) { return nn::gather_rows(x, idx); }

}  // namespace

nn::Tensor sincos_positions(std::size_t n, std::size_t dim) {
  std::vector<double> v(n * dim);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      v[p * dim + i] = (i % 2 == 0) ? std::sin(static_cast<double>(p) * freq) : std::cos(static_cast<double>(p) * freq);
    }
  return nn::Tensor::from({n, dim}, std::move(v));
}

Encoder Encoder::create(std::size_t input_dim, std::size_t dim, std::size_t depth, std::size_t heads, Rng& rng) {
  Encoder e;
  e.input_dim = input_dim;
  e.dim = dim;
  e.embed_w = gaussian({input_dim, dim}, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  e.embed_b = nn::Tensor::zeros({dim}, true);
  for (std::size_t i = 0; i < depth; ++i) e.blocks.push_back(nn::SelfAttentionBlock::create(dim, heads, rng));
  return e;
}

nn::Tensor Encoder::forward(const nn::Tensor& tokens, std::span<const std::size_t> indices,
                            const nn::Tensor& positions) const {
  require(tokens.cols() == input_dim, "encoder: token width mismatch");
  nn::Tensor x = nn::add(nn::linear(rows_of(tokens, indices), embed_w, embed_b), rows_of(positions, indices));
  for (const auto& b : blocks) x = b.forward(x);
  const auto ones = nn::Tensor::full({dim}, 1.0), zeros = nn::Tensor::zeros({dim});
  return nn::layer_norm(x, ones, zeros);
}

std::vector<nn::Tensor> Encoder::parameters() const {
  std::vector<nn::Tensor> p = {embed_w, embed_b};
  for (const auto& b : blocks)
    for (auto& t : b.parameters()) p.push_back(t);
  return p;
}

Encoder Encoder::clone() const {
  Encoder e = *this;
  e.embed_w = embed_w.clone();
  e.embed_b = embed_b.clone();
  for (auto& b : e.blocks)
    for (auto* t : {&b.ln1_gamma, &b.ln1_beta, &b.w_qkv, &b.b_qkv, &b.w_out, &b.b_out, &b.ln2_gamma, &b.ln2_beta,
                    &b.fc1_w, &b.fc1_b, &b.fc2_w, &b.fc2_b})
      *t = t->clone();
  return e;
}

Predictor Predictor::create(std::size_t dim, std::size_t depth, std::size_t heads, Rng& rng) {
  Predictor p;
  p.dim = dim;
  p.in_w = gaussian({dim, dim}, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  p.in_b = nn::Tensor::zeros({dim}, true);
  p.mask_token = gaussian({dim}, 0.02, rng);
  p.out_w = gaussian({dim, dim}, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  p.out_b = nn::Tensor::zeros({dim}, true);
  for (std::size_t i = 0; i < depth; ++i) p.blocks.push_back(nn::SelfAttentionBlock::create(dim, heads, rng));
  return p;
}

nn::Tensor Predictor::forward(const nn::Tensor& context, const MaskSpec& mask, const nn::Tensor& positions) const {
  require(context.rows() == mask.context.size(), "predictor: context rows do not match the mask");
  nn::Tensor ctx = nn::add(nn::linear(context, in_w, in_b), rows_of(positions, mask.context));
  nn::Tensor queries = nn::add_row(rows_of(positions, mask.masked), mask_token);
  const nn::Tensor parts[] = {ctx, queries};
  nn::Tensor x = nn::concat_rows(parts);
  for (const auto& b : blocks) x = b.forward(x);
  return nn::linear(nn::slice_rows(x, mask.context.size(), mask.masked.size()), out_w, out_b);
}

std::vector<nn::Tensor> Predictor::parameters() const {
  std::vector<nn::Tensor> p = {in_w, in_b, mask_token};
  for (const auto& b : blocks)
    for (auto& t : b.parameters()) p.push_back(t);
  p.push_back(out_w);
  p.push_back(out_b);
  return p;
}

void ema_update(std::span<nn::Tensor> target, std::span<const nn::Tensor> context, double momentum) {
  require(target.size() == context.size(), "ema_update: parameter lists differ in length");
  require(momentum >= 0.0 && momentum <= 1.0, "ema_update: momentum must be in [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i) {
    require(target[i].shape() == context[i].shape(), "ema_update: shape mismatch at parameter " + std::to_string(i));
    auto t = target[i].mutable_data();
    const auto c = context[i].data();
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = momentum * t[j] + (1.0 - momentum) * c[j];
  }
}

nn::Tensor jepa_loss(const Encoder& context_encoder, const Predictor& predictor, const Encoder& target_encoder,
                     const nn::Tensor& tokens, const MaskSpec& mask, const nn::Tensor& positions,
                     bool stop_gradient) {
  require(!mask.masked.empty(), "jepa_loss: empty mask");
  require(context_encoder.dim == target_encoder.dim && context_encoder.input_dim == target_encoder.input_dim,
          "jepa_loss: encoders do not share a token layout");
  nn::Tensor pred = predictor.forward(context_encoder.forward(tokens, mask.context, positions), mask, positions);
  nn::Tensor target = target_encoder.forward(tokens, mask.masked, positions);
  if (stop_gradient) target = target.detach();
  return nn::l1_loss(pred, target);
}

double mean_dimension_variance(const nn::Tensor& latents) {
  const std::size_t rows = latents.rows(), cols = latents.cols();
  require(rows >= 2, "variance needs at least two rows");
  const auto v = latents.data();
  double total = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += v[i * cols + j];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t i = 0; i < rows; ++i) var += (v[i * cols + j] - mean) * (v[i * cols + j] - mean);
    total += var / static_cast<double>(rows);
  }
  return total / static_cast<double>(cols);
}

}  // namespace privi::jepa
