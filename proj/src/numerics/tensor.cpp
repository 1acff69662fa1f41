#include "privi/numerics/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "privi/common/error.hpp"

namespace privi::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) require(d > 0, "tensor dimensions must be positive: " + shape_string(shape));
  require(shape_size(shape) == values.size(),
          "tensor data length " + std::to_string(values.size()) + " does not match shape " + shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

std::size_t Tensor::rows() const { return shape().empty() ? 1 : size() / shape().back(); }
std::size_t Tensor::cols() const { return shape().empty() ? 1 : shape().back(); }

double Tensor::item() const {
  require(size() == 1, "item() on non-scalar tensor " + shape_string(shape()));
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  return node_->ensure_grad();
}

Tensor Tensor::make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                           std::function<void(Node&)> backward_fn) {
  Tensor out = from(std::move(shape), std::move(values));
  bool track = false;
  for (const auto& in : inputs) track = track || in.requires_grad();
  if (track) {
    out.node_->requires_grad = true;
    out.node_->backward_fn = std::move(backward_fn);
    out.node_->parents.reserve(inputs.size());
    for (auto& in : inputs) out.node_->parents.push_back(in.node_);
  }
  return out;
}

void Tensor::backward() {
  require(size() == 1, "backward() requires a scalar output, got " + shape_string(shape()));
  if (!requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor Tensor::clone() const { return from(shape(), node_->value, requires_grad()); }

bool Tensor::has_fault() const {
  for (double v : node_->value)
    if (!std::isfinite(v)) return true;
  for (double g : node_->grad)
    if (!std::isfinite(g)) return true;
  return false;
}

std::size_t count_parameters(std::span<const Tensor> params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

}  // namespace privi::nn
