#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "privi/numerics/attention.hpp"
#include "privi/numerics/tensor.hpp"
#include "privi/providers/types.hpp"

namespace privi::clf {

enum class Task { single_label, multi_label };
enum class LossKind { ce, bce, eql };

std::string_view to_string(Task t);
std::string_view to_string(LossKind l);
Task parse_task(std::string_view s);
LossKind parse_loss(std::string_view s);

struct ClassifierConfig {
  std::size_t input_dim = 1024;
  std::size_t width = 64;
  std::size_t layers = 3;
  std::size_t heads = 8;
  std::size_t classes = 2;
  Task task = Task::single_label;
  LossKind loss = LossKind::ce;
  std::size_t epochs = 40;
  double base_lr = 1e-3;
  double warmup_fraction = 0.1;
  std::size_t batch_size = 64;
  double eql_lambda = 0.0;
  std::uint64_t seed = 0;

  // Throws ContractError on an inconsistent configuration.
  void validate() const;
  nlohmann::json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json& j);
  bool operator==(const ClassifierConfig&) const = default;
};

// Attention head over frozen patch tokens:
//   x~_i = U LayerNorm(x_i) + b
//   X'   = blocks([q_1 .. q_C, x~_1 .. x~_N])
//   y_j  = sigma(v_j . x'_j + c_j)
// sigma is a softmax across the C scalars for single-label tasks and an
// element-wise sigmoid for multi-label tasks. Patch-token outputs are unused.
class AttentiveClassifier {
 public:
  static AttentiveClassifier create(const ClassifierConfig& config);

  const ClassifierConfig& config() const { return config_; }

  // Pre-activation scores [C]. The features never receive gradient.
  nn::Tensor logits(const TokenFeatures& features) const;
  // Probabilities (softmax or sigmoid of logits).
  std::vector<double> predict(const TokenFeatures& features) const;

  // Declaration order; fixed for checkpoints.
  std::vector<nn::Tensor> parameters() const;
  std::size_t parameter_count() const;
  // 2D + (D D' + D') + layers * block(D') + C D' + C (D' + 1).
  static std::size_t parameter_count(const ClassifierConfig& config);

  // Deep copy with independent storage.
  AttentiveClassifier clone() const;

 private:
  ClassifierConfig config_;
  nn::Tensor ln_gamma_, ln_beta_;
  nn::Tensor proj_w_, proj_b_;
  nn::Tensor class_tokens_;
  std::vector<nn::SelfAttentionBlock> blocks_;
  nn::Tensor head_v_, head_c_;
};

// Probability map of logits for the task.
std::vector<double> activate(std::span<const double> logits, Task task);

}  // namespace privi::clf
