#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace privi::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into parents' grads.
  std::function<void(Node& self)> backward_fn;

  std::vector<double>& ensure_grad();
};

// Handle to a node in the autodiff graph. Copies alias the same storage, the
// way parameters are shared between a model and its optimizer; use clone()
// for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  // Leading dimensions flattened; last axis is the row length.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zeros when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  // Reverse-mode sweep from this scalar; seeds d(self)/d(self) = 1.
  void backward();

  // Same values, cut from the graph, no gradient.
  Tensor detach() const;
  // Independent deep copy of values, keeping requires_grad.
  Tensor clone() const;

  // True if any value or accumulated gradient is NaN or infinite.
  bool has_fault() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

  // Builds the result node of an op; grad tracking is inherited from inputs.
  static Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                            std::function<void(Node&)> backward_fn);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Sum of element counts.
std::size_t count_parameters(std::span<const Tensor> params);

}  // namespace privi::nn
