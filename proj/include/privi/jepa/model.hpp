#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "privi/common/rng.hpp"
#include "privi/jepa/mask.hpp"
#include "privi/numerics/attention.hpp"
#include "privi/numerics/tensor.hpp"

namespace privi::jepa {

// Fixed 1D sine-cosine table over flattened token indices, [n x dim].
nn::Tensor sincos_positions(std::size_t n, std::size_t dim);

// Token embedding + positions + transformer blocks + a parameter-free
// LayerNorm, applied to a subset of the grid's tokens.
struct Encoder {
  std::size_t input_dim = 0;
  std::size_t dim = 0;
  nn::Tensor embed_w, embed_b;
  std::vector<nn::SelfAttentionBlock> blocks;

  static Encoder create(std::size_t input_dim, std::size_t dim, std::size_t depth, std::size_t heads, Rng& rng);

  // tokens [N x input_dim], positions [N x dim]; returns [|indices| x dim].
  nn::Tensor forward(const nn::Tensor& tokens, std::span<const std::size_t> indices,
                     const nn::Tensor& positions) const;
  std::vector<nn::Tensor> parameters() const;
  Encoder clone() const;
};

// Maps context latents plus learned mask tokens (at the masked positions) to
// predicted latents for the masked tokens.
struct Predictor {
  std::size_t dim = 0;
  nn::Tensor in_w, in_b, mask_token, out_w, out_b;
  std::vector<nn::SelfAttentionBlock> blocks;

  static Predictor create(std::size_t dim, std::size_t depth, std::size_t heads, Rng& rng);

  // context [|context| x dim] -> [|masked| x dim]
  nn::Tensor forward(const nn::Tensor& context, const MaskSpec& mask, const nn::Tensor& positions) const;
  std::vector<nn::Tensor> parameters() const;
};

// theta_target <- m * theta_target + (1 - m) * theta_context, element-wise.
void ema_update(std::span<nn::Tensor> target, std::span<const nn::Tensor> context, double momentum);

// Mean over masked tokens and dimensions of |P(E(context)) - targets|.
// With stop_gradient the target encoder's output is detached, so only the
// context encoder and predictor receive gradient.
nn::Tensor jepa_loss(const Encoder& context_encoder, const Predictor& predictor, const Encoder& target_encoder,
                     const nn::Tensor& tokens, const MaskSpec& mask, const nn::Tensor& positions,
                     bool stop_gradient = true);

// Mean over dimensions of the per-dimension variance across rows.
double mean_dimension_variance(const nn::Tensor& latents);

}  // namespace privi::jepa
