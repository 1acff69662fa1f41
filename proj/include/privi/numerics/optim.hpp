#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "privi/numerics/tensor.hpp"

namespace privi::nn {

// Linear warmup from 0 to base_lr over warmup_steps, then either cosine decay
// to final_lr_fraction * base_lr at total_steps or a constant base_lr.
struct LrSchedule {
  double base_lr = 1e-3;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;
  double final_lr_fraction = 0.0;
  bool constant_after_warmup = false;

  double lr_at(std::size_t step) const;

  static LrSchedule warmup_cosine(double base_lr, std::size_t total_steps, double warmup_fraction,
                                  double final_lr_fraction = 0.0);
  static LrSchedule constant(double base_lr, std::size_t warmup_steps = 0, std::size_t total_steps = 1);
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  // Global-norm clipping threshold; off when unset.
  std::optional<double> clip_norm;
};

struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, LrSchedule schedule, AdamOptions options = {});

  // One update from the parameters' accumulated gradients, using the
  // learning rate lr_at(step + 1). Returns that rate. If any gradient is
  // non-finite, throws FaultError and leaves parameters and state untouched.
  double step();
  void zero_grad();

  const OptimizerState& state() const { return state_; }
  const LrSchedule& schedule() const { return schedule_; }
  const std::vector<Tensor>& parameters() const { return params_; }

 private:
  std::vector<Tensor> params_;
  LrSchedule schedule_;
  AdamOptions options_;
  OptimizerState state_;
};

}  // namespace privi::nn
