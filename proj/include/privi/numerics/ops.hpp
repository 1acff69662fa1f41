#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "privi/common/rng.hpp"
#include "privi/numerics/tensor.hpp"

// Differentiable operations. Tensors are treated as row-major matrices whose
// last axis is the row; leading axes are flattened into rows.
namespace privi::nn {

// a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x[B x M] * W[M x K] + b[K]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// x[m x n] + b[n] broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
// Exact (erf) GELU.
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
// Inverted dropout; identity when !training or p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);

// Rows [begin, begin + count) of a matrix.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// out[j] = dot(x[j, :], v[j, :]) + c[j]; x, v are [C x D], c is [C].
Tensor rowwise_dot(const Tensor& x, const Tensor& v, const Tensor& c);

// Multi-head softmax self-attention over all rows of x[T x D], no masking.
// w_qkv is [D x 3D] (columns: Q | K | V), w_out is [D x D].
Tensor multi_head_attention(const Tensor& x, const Tensor& w_qkv, const Tensor& b_qkv, const Tensor& w_out,
                            const Tensor& b_out, std::size_t heads);

}  // namespace privi::nn
