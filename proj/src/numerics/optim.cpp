#include "privi/numerics/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "privi/common/error.hpp"

namespace privi::nn {

double LrSchedule::lr_at(std::size_t step) const {
  if (warmup_steps > 0 && step < warmup_steps)
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (constant_after_warmup) return base_lr;
  if (total_steps <= warmup_steps) return base_lr * final_lr_fraction;
  const double progress = std::min(1.0, static_cast<double>(step - warmup_steps) /
                                            static_cast<double>(total_steps - warmup_steps));
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return base_lr * (final_lr_fraction + (1.0 - final_lr_fraction) * cosine);
}

LrSchedule LrSchedule::warmup_cosine(double base_lr, std::size_t total_steps, double warmup_fraction,
                                     double final_lr_fraction) {
  require(base_lr > 0, "learning rate must be positive");
  require(total_steps > 0, "schedule needs at least one step");
  LrSchedule s;
  s.base_lr = base_lr;
  s.total_steps = total_steps;
  s.warmup_steps = static_cast<std::size_t>(std::round(warmup_fraction * static_cast<double>(total_steps)));
  s.final_lr_fraction = final_lr_fraction;
  return s;
}

LrSchedule LrSchedule::constant(double base_lr, std::size_t warmup_steps, std::size_t total_steps) {
  require(base_lr > 0, "learning rate must be positive");
  LrSchedule s;
  s.base_lr = base_lr;
  s.warmup_steps = warmup_steps;
  s.total_steps = std::max(total_steps, warmup_steps + 1);
  s.constant_after_warmup = true;
  return s;
}

Adam::Adam(std::vector<Tensor> params, LrSchedule schedule, AdamOptions options)
    : params_(std::move(params)), schedule_(schedule), options_(options) {
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(p.size(), 0.0);
    state_.second_moment.emplace_back(p.size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double Adam::step() {
  if (!schedule_.constant_after_warmup)
    require(state_.step < schedule_.total_steps, "adam: step counter reached total_steps " +
                                                    std::to_string(schedule_.total_steps));
  double sq_norm = 0.0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (double g : params_[i].grad()) {
      if (!std::isfinite(g))
        throw FaultError("adam: non-finite gradient in parameter " + std::to_string(i) + " " +
                         shape_string(params_[i].shape()) + " at step " + std::to_string(state_.step));
      sq_norm += g * g;
    }
  }
  double clip = 1.0;
  if (options_.clip_norm && std::sqrt(sq_norm) > *options_.clip_norm) clip = *options_.clip_norm / std::sqrt(sq_norm);

  const std::uint64_t t = ++state_.step;
  const double lr = schedule_.lr_at(t);
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto value = params_[i].mutable_data();
    const auto grad = params_[i].grad();
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j] * clip + options_.weight_decay * value[j];
      m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g;
      v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g * g;
      value[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + options_.eps);
    }
  }
  return lr;
}

}  // namespace privi::nn
