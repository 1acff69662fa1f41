#pragma once

#include <cstddef>
#include <vector>

#include "privi/common/rng.hpp"
#include "privi/numerics/tensor.hpp"

namespace privi::nn {

inline constexpr std::size_t kMlpRatio = 4;

// Pre-norm transformer block:
//   h = x + MHSA(LN1(x));  y = h + MLP(LN2(h)),  MLP = fc2(GELU(fc1(.)))
// with MLP hidden width kMlpRatio * width.
struct SelfAttentionBlock {
  std::size_t width = 0;
  std::size_t heads = 0;
  Tensor ln1_gamma, ln1_beta;
  Tensor w_qkv, b_qkv, w_out, b_out;
  Tensor ln2_gamma, ln2_beta;
  Tensor fc1_w, fc1_b, fc2_w, fc2_b;

  // Weights ~ N(0, init_std), biases 0, norms at identity.
  static SelfAttentionBlock create(std::size_t width, std::size_t heads, Rng& rng, double init_std = 0.02);

  Tensor forward(const Tensor& x) const;

  // Declaration order; fixed for checkpoints.
  std::vector<Tensor> parameters() const;

  static std::size_t parameter_count(std::size_t width);
};

}  // namespace privi::nn
