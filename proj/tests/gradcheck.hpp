#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "privi/common/rng.hpp"
#include "privi/numerics/tensor.hpp"

namespace privi::testing {

// Largest |analytic - numeric| / max(1, |numeric|) over every input element,
// with central differences of step h.
inline double gradient_error(const std::function<nn::Tensor(const std::vector<nn::Tensor>&)>& f,
                             std::vector<nn::Tensor> inputs, double h = 1e-5) {
  for (auto& t : inputs) t.zero_grad();
  f(inputs).backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    auto values = inputs[k].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const double up = f(inputs).item();
      values[i] = orig - h;
      const double down = f(inputs).item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic[k][i] - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return worst;
}

inline nn::Tensor random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0, bool grad = true) {
  std::vector<double> v(nn::shape_size(shape));
  for (auto& x : v) x = rng.normal(0.0, scale);
  return nn::Tensor::from(std::move(shape), std::move(v), grad);
}

}  // namespace privi::testing
