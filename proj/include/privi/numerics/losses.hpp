#pragma once

#include <cstddef>
#include <span>

#include "privi/numerics/tensor.hpp"

namespace privi::nn {

// Softmax cross-entropy of one logit vector [C] against a class index.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

// Mean over classes of sigmoid binary cross-entropy; targets in [0, 1].
Tensor binary_cross_entropy(const Tensor& logits, std::span<const double> targets);

// Mean absolute error over all elements. `target` never receives gradient
// unless it tracks gradients itself.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// Softmax equalization loss: for every non-ground-truth class whose training
// frequency is below `lambda`, its exp-logit is dropped from the softmax
// denominator, so it receives no discouraging (negative) gradient.
// lambda = 0 reduces exactly to cross_entropy.
Tensor equalization_loss(const Tensor& logits, std::size_t label, std::span<const double> class_freqs,
                         double lambda);

// Sigmoid form for multi-label targets: the negative term of a rare class is
// weighted out unless that class is positive. lambda = 0 reduces to
// binary_cross_entropy.
Tensor equalization_loss_multi(const Tensor& logits, std::span<const double> targets,
                               std::span<const double> class_freqs, double lambda);

}  // namespace privi::nn
