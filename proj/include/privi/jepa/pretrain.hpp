#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privi/jepa/mask.hpp"
#include "privi/jepa/model.hpp"

namespace privi::jepa {

struct JepaConfig {
  TokenGrid grid{2, 4, 4};
  std::size_t input_dim = 16;
  std::size_t dim = 32;
  std::size_t heads = 4;
  std::size_t encoder_depth = 2;
  std::size_t predictor_depth = 1;
  double mask_ratio = 0.5;
  BlockShape block{1, 2, 2};
  // Linear momentum schedule from ema_start to ema_end over `steps`.
  double ema_start = 0.996;
  double ema_end = 1.0;
  std::size_t steps = 2000;
  std::size_t batch = 4;
  std::size_t warmup_steps = 100;
  // Constant after warmup.
  double lr = 1e-3;
  // false: ablation where the context encoder also produces the targets and
  // gradient flows through them; no EMA copy exists.
  bool ema_target = true;
  std::uint64_t seed = 0;

  void validate() const;
  double momentum_at(std::size_t step) const;
  nlohmann::json to_json() const;
  static JepaConfig from_json(const nlohmann::json& j);

  // Continual-pretraining hyperparameters at full scale, kept for reference.
  static JepaConfig full_scale_preset();
};

struct JepaDiagnostic {
  std::size_t step = 0;
  double loss = 0.0;
  double target_variance = 0.0;
  double lr = 0.0;
};

// Returns the [grid.size() x input_dim] tokens of batch item `item` at `step`.
using ClipStream = std::function<nn::Tensor(std::size_t step, std::size_t item)>;

// Clips with temporal structure: a few objects, each a random feature
// vector spread over nearby cells, drift across the grid with a constant
// velocity per clip (wrapping at the edges), on top of weak noise.
ClipStream moving_pattern_stream(const JepaConfig& config, std::uint64_t seed, std::size_t objects = 2);

struct PretrainResult {
  Encoder context_encoder;
  Encoder target_encoder;  // equals context_encoder in the ablation
  Predictor predictor;
  std::vector<JepaDiagnostic> diagnostics;
  std::size_t completed_steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Called after every completed step.
using StepObserver = std::function<void(std::size_t step, const PretrainResult& state)>;

// Trains context encoder and predictor with Adam; the target encoder follows
// by EMA. A non-finite loss or gradient stops training and keeps the last
// good parameters.
PretrainResult run_pretrain(const JepaConfig& config, const ClipStream& stream, const StepObserver& observer = {});

std::string diagnostics_to_jsonl(const std::vector<JepaDiagnostic>& diagnostics);

// PVJP parameter file: context encoder, predictor, then target encoder.
void save_jepa_checkpoint(const std::filesystem::path& path, const JepaConfig& config, const PretrainResult& result);

}  // namespace privi::jepa
