#include "privi/numerics/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "privi/common/error.hpp"

namespace privi::nn {
namespace {

void require_finite(const Tensor& logits, const char* op) {
  for (double v : logits.data()) require(std::isfinite(v), std::string(op) + ": logits must be finite");
}

void require_freqs(std::span<const double> freqs, std::size_t classes) {
  require(freqs.size() == classes, "equalization loss: class_freqs length must equal class count");
  double total = 0.0;
  for (double f : freqs) {
    require(f >= 0.0, "equalization loss: negative class frequency");
    total += f;
  }
  require(std::abs(total - 1.0) < 1e-6, "equalization loss: class_freqs must sum to 1");
}

// -log( exp(z_y) / sum_k w_k exp(z_k) ) with w_y = 1.
Tensor weighted_softmax_ce(const Tensor& logits, std::size_t label, std::vector<double> weights) {
  const std::size_t c = logits.size();
  const auto z = logits.data();
  double mx = z[0];
  for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, z[k]);
  std::vector<double> e(c);
  double denom = 0.0;
  for (std::size_t k = 0; k < c; ++k) denom += (e[k] = weights[k] * std::exp(z[k] - mx));
  const double loss = -(z[label] - mx) + std::log(denom);
  std::vector<double> prob(c);
  for (std::size_t k = 0; k < c; ++k) prob[k] = e[k] / denom;
  return Tensor::make_result({1}, {loss}, {logits}, [label, prob = std::move(prob)](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t k = 0; k < prob.size(); ++k) g[k] += self.grad[0] * (prob[k] - (k == label ? 1.0 : 0.0));
  });
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
double sigmoid_of(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// mean_k w_k * BCE(z_k, t_k)
Tensor weighted_bce(const Tensor& logits, std::span<const double> targets, std::vector<double> weights) {
  const std::size_t c = logits.size();
  require(targets.size() == c, "binary_cross_entropy: target length must equal logit count");
  double loss = 0.0;
  std::vector<double> dz(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double z = logits[k], t = targets[k];
    require(t >= 0.0 && t <= 1.0, "binary_cross_entropy: targets must be in [0, 1]");
    loss -= weights[k] * (t * log_sigmoid(z) + (1.0 - t) * log_sigmoid(-z));
    dz[k] = weights[k] * (sigmoid_of(z) - t) / static_cast<double>(c);
  }
  loss /= static_cast<double>(c);
  return Tensor::make_result({1}, {loss}, {logits}, [dz = std::move(dz)](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t k = 0; k < dz.size(); ++k) g[k] += self.grad[0] * dz[k];
  });
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  require_finite(logits, "cross_entropy");
  require(label < logits.size(), "cross_entropy: label " + std::to_string(label) + " out of range for " +
                                     std::to_string(logits.size()) + " classes");
  return weighted_softmax_ce(logits, label, std::vector<double>(logits.size(), 1.0));
}

Tensor binary_cross_entropy(const Tensor& logits, std::span<const double> targets) {
  require_finite(logits, "binary_cross_entropy");
  return weighted_bce(logits, targets, std::vector<double>(logits.size(), 1.0));
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require(pred.shape() == target.shape(), "l1_loss: prediction and target shapes differ");
  const std::size_t n = pred.size();
  double loss = 0.0;
  std::vector<double> sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = pred[i] - target[i];
    loss += std::abs(diff);
    sign[i] = (diff > 0) - (diff < 0);
  }
  loss /= static_cast<double>(n);
  return Tensor::make_result({1}, {loss}, {pred, target}, [sign = std::move(sign), n](Node& self) {
    const double scale = self.grad[0] / static_cast<double>(n);
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += scale * sign[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] -= scale * sign[i];
    }
  });
}

Tensor equalization_loss(const Tensor& logits, std::size_t label, std::span<const double> class_freqs,
                         double lambda) {
  require_finite(logits, "equalization_loss");
  const std::size_t c = logits.size();
  require(label < c, "equalization_loss: label " + std::to_string(label) + " out of range");
  require_freqs(class_freqs, c);
  std::vector<double> w(c, 1.0);
  for (std::size_t k = 0; k < c; ++k)
    if (k != label && class_freqs[k] < lambda) w[k] = 0.0;
  return weighted_softmax_ce(logits, label, std::move(w));
}

Tensor equalization_loss_multi(const Tensor& logits, std::span<const double> targets,
                               std::span<const double> class_freqs, double lambda) {
  require_finite(logits, "equalization_loss_multi");
  const std::size_t c = logits.size();
  require_freqs(class_freqs, c);
  require(targets.size() == c, "equalization_loss_multi: target length must equal logit count");
  // w_k = 1 - T(f_k) * (1 - y_k): only the negative term of a rare class is removed.
  std::vector<double> w(c, 1.0);
  for (std::size_t k = 0; k < c; ++k)
    if (class_freqs[k] < lambda && targets[k] < 0.5) w[k] = 0.0;
  return weighted_bce(logits, targets, std::move(w));
}

}  // namespace privi::nn
