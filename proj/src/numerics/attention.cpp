#include "privi/numerics/attention.hpp"

#include "privi/common/error.hpp"
#include "privi/numerics/ops.hpp"

namespace privi::nn {
namespace {

Tensor gaussian(Shape shape, double std, Rng& rng) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.normal(0.0, std);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

SelfAttentionBlock SelfAttentionBlock::create(std::size_t width, std::size_t heads, Rng& rng, double init_std) {
  require(heads > 0 && width % heads == 0,
          "SelfAttentionBlock: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
              " heads");
  const std::size_t hidden = kMlpRatio * width;
  SelfAttentionBlock b;
  b.width = width;
  b.heads = heads;
  b.ln1_gamma = Tensor::full({width}, 1.0, true);
  b.ln1_beta = Tensor::zeros({width}, true);
  b.w_qkv = gaussian({width, 3 * width}, init_std, rng);
  b.b_qkv = Tensor::zeros({3 * width}, true);
  b.w_out = gaussian({width, width}, init_std, rng);
  b.b_out = Tensor::zeros({width}, true);
  b.ln2_gamma = Tensor::full({width}, 1.0, true);
  b.ln2_beta = Tensor::zeros({width}, true);
  b.fc1_w = gaussian({width, hidden}, init_std, rng);
  b.fc1_b = Tensor::zeros({hidden}, true);
  b.fc2_w = gaussian({hidden, width}, init_std, rng);
  b.fc2_b = Tensor::zeros({width}, true);
  return b;
}

Tensor SelfAttentionBlock::forward(const Tensor& x) const {
  require(x.cols() == width, "SelfAttentionBlock: input width " + std::to_string(x.cols()) + " != " +
                                 std::to_string(width));
  Tensor h = add(x, multi_head_attention(layer_norm(x, ln1_gamma, ln1_beta), w_qkv, b_qkv, w_out, b_out, heads));
  Tensor m = linear(gelu(linear(layer_norm(h, ln2_gamma, ln2_beta), fc1_w, fc1_b)), fc2_w, fc2_b);
  return add(h, m);
}

std::vector<Tensor> SelfAttentionBlock::parameters() const {
  return {ln1_gamma, ln1_beta, w_qkv, b_qkv, w_out, b_out, ln2_gamma, ln2_beta, fc1_w, fc1_b, fc2_w, fc2_b};
}

std::size_t SelfAttentionBlock::parameter_count(std::size_t width) {
  const std::size_t hidden = kMlpRatio * width;
  return 2 * width                          // ln1
         + width * 3 * width + 3 * width    // qkv
         + width * width + width            // out proj
         + 2 * width                        // ln2
         + width * hidden + hidden          // fc1
         + hidden * width + width;          // fc2
}

}  // namespace privi::nn
