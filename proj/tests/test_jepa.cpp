#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "privi/classifier/checkpoint.hpp"
#include "privi/common/error.hpp"
#include "privi/jepa/crop.hpp"
#include "privi/jepa/mask.hpp"
#include "privi/jepa/model.hpp"
#include "privi/jepa/pretrain.hpp"
#include "privi/numerics/losses.hpp"
#include "privi/numerics/ops.hpp"
#include "tempdir.hpp"

namespace privi::jepa {
namespace {

using privi::testing::random_tensor;

// ---- masking

TEST(Mask, ExactFitAndDeterminism) {
  const TokenGrid grid{2, 2, 2};
  const auto m = sample_mask(grid, 0.5, {1, 1, 1}, 7);
  EXPECT_EQ(m.masked.size(), 4u);
  EXPECT_EQ(m.context.size(), 4u);
  validate_mask(m, grid.size());
  const auto again = sample_mask(grid, 0.5, {1, 1, 1}, 7);
  EXPECT_EQ(again.masked, m.masked);
}

TEST(Mask, AchievedRatioBound) {
  const TokenGrid grid{2, 4, 4};
  const BlockShape block{1, 2, 2};
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto m = sample_mask(grid, 0.5, block, s);
    validate_mask(m, grid.size());
    const double r = static_cast<double>(m.masked.size()) / static_cast<double>(grid.size());
    EXPECT_GE(r, 0.5);
    EXPECT_LE(r, 0.5 + static_cast<double>(block.size()) / static_cast<double>(grid.size()));
    EXPECT_TRUE(std::is_sorted(m.masked.begin(), m.masked.end()));
  }
}

TEST(Mask, InvalidArguments) {
  const TokenGrid grid{1, 2, 2};
  EXPECT_THROW(sample_mask(grid, 0.0, {1, 1, 1}, 0), ContractError);
  EXPECT_THROW(sample_mask(grid, 1.0, {1, 1, 1}, 0), ContractError);
  EXPECT_THROW(sample_mask(grid, 0.5, {1, 3, 1}, 0), ContractError);
  EXPECT_THROW(validate_mask({{0, 1}, {1, 2, 3}}, 4), ContractError);
  EXPECT_THROW(validate_mask({{}, {0, 1, 2, 3}}, 4), ContractError);
}

// ---- loss and EMA

TEST(Loss, L1Arithmetic) {
  const auto pred = nn::Tensor::from({2, 2}, {1, 0, 0, 0});
  const auto target = nn::Tensor::from({2, 2}, {0, 0, 0, 1});
  EXPECT_DOUBLE_EQ(nn::l1_loss(pred, target).item(), 0.5);
  EXPECT_DOUBLE_EQ(nn::l1_loss(target, target).item(), 0.0);
  // Enumeration order of masked tokens does not matter.
  const std::vector<std::size_t> swap{1, 0};
  EXPECT_DOUBLE_EQ(nn::l1_loss(nn::gather_rows(pred, swap), nn::gather_rows(target, swap)).item(), 0.5);
}

TEST(Ema, Arithmetic) {
  auto target = std::vector<nn::Tensor>{nn::Tensor::zeros({2})};
  const auto context = std::vector<nn::Tensor>{nn::Tensor::full({2}, 1.0)};
  ema_update(target, context, 1.0);
  EXPECT_EQ(target[0].data()[0], 0.0);
  ema_update(target, context, 0.99);
  EXPECT_NEAR(target[0].data()[1], 0.01, 1e-15);
  ema_update(target, context, 0.0);
  EXPECT_EQ(target[0].data()[0], 1.0);
  auto bad = std::vector<nn::Tensor>{nn::Tensor::zeros({3})};
  EXPECT_THROW(ema_update(bad, context, 0.5), ContractError);
}

struct Toy {
  TokenGrid grid{1, 2, 3};
  Encoder context, target;
  Predictor predictor;
  nn::Tensor tokens, positions;
  MaskSpec mask;

  explicit Toy(std::uint64_t seed) {
    Rng rng(seed);
    context = Encoder::create(3, 4, 1, 2, rng);
    target = context.clone();
    predictor = Predictor::create(4, 1, 2, rng);
    for (auto* ps : {&context, &target})
      for (auto& p : ps->parameters())
        for (auto& v : p.mutable_data()) v += rng.normal(0.0, 0.1);
    for (auto& p : predictor.parameters())
      for (auto& v : p.mutable_data()) v += rng.normal(0.0, 0.1);
    tokens = random_tensor({grid.size(), 3}, rng, 1.0, false);
    positions = sincos_positions(grid.size(), 4);
    mask = sample_mask(grid, 0.5, {1, 1, 1}, seed);
  }
};

TEST(Loss, GradientsMatchFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Toy toy(s);
    auto params = toy.context.parameters();
    for (const auto& p : toy.predictor.parameters()) params.push_back(p);
    const auto err = privi::testing::gradient_error(
        [&](const std::vector<nn::Tensor>&) {
          return jepa_loss(toy.context, toy.predictor, toy.target, toy.tokens, toy.mask, toy.positions);
        },
        params, 1e-4);
    EXPECT_LE(err, 1e-3) << "seed " << s;
  }
}

TEST(Loss, StopGradientLeavesTargetUntouched) {
  Toy toy(3);
  for (auto& p : toy.target.parameters()) p.zero_grad();
  jepa_loss(toy.context, toy.predictor, toy.target, toy.tokens, toy.mask, toy.positions).backward();
  for (const auto& p : toy.target.parameters())
    for (double g : p.grad()) EXPECT_EQ(g, 0.0);
  double context_grad = 0.0;
  for (const auto& p : toy.context.parameters())
    for (double g : p.grad()) context_grad += std::abs(g);
  EXPECT_GT(context_grad, 0.0);
}

TEST(Loss, ZeroWhenPredictionEqualsTarget) {
  const auto latents = nn::Tensor::from({3, 2}, {0.5, -1, 2, 0, 1, 1});
  EXPECT_EQ(nn::l1_loss(latents, latents.detach()).item(), 0.0);
  // Population variances: dim 0 of {0.5, 2, 1} is 7/18, dim 1 of {-1, 0, 1} is 2/3.
  EXPECT_NEAR(mean_dimension_variance(latents), (7.0 / 18.0 + 2.0 / 3.0) / 2.0, 1e-12);
  const auto same = nn::Tensor::from({3, 2}, {1, 2, 1, 2, 1, 2});
  EXPECT_EQ(mean_dimension_variance(same), 0.0);
}

// ---- crop

TEST(Crop, Examples) {
  Rng rng(1);
  EXPECT_EQ(crop_around_box(100, 80, {0, 0, 100, 80, 1, ""}, 1.5, rng), (CropRect{0, 0, 100, 80}));
  EXPECT_EQ(crop_around_box(100, 100, {40, 40, 60, 50, 1, ""}, 1.0, rng), (CropRect{40, 35, 60, 55}));
  EXPECT_EQ(crop_around_box(100, 100, {0, 0, 10, 10, 1, ""}, 1.0, rng), (CropRect{0, 0, 10, 10}));
  EXPECT_THROW(crop_around_box(100, 100, {5, 5, 5, 9, 1, ""}, 1.2, rng), ContractError);
  EXPECT_THROW(crop_around_box(100, 100, {120, 5, 130, 9, 1, ""}, 1.2, rng), ContractError);
}

TEST(Crop, AlwaysContainsTheBox) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const int w = 20 + static_cast<int>(rng.index(200)), h = 20 + static_cast<int>(rng.index(200));
    const double x1 = rng.uniform(0, w - 2), y1 = rng.uniform(0, h - 2);
    const DetectionBox box{x1, y1, rng.uniform(x1 + 1, w), rng.uniform(y1 + 1, h), 1, ""};
    const auto c = crop_around_box(w, h, box, 1.5, rng);
    EXPECT_LE(c.x1, box.x1 + 1e-9);
    EXPECT_LE(c.y1, box.y1 + 1e-9);
    EXPECT_GE(c.x2, box.x2 - 1e-9);
    EXPECT_GE(c.y2, box.y2 - 1e-9);
    EXPECT_GE(c.x1, 0.0);
    EXPECT_GE(c.y1, 0.0);
    EXPECT_LE(c.x2, w);
    EXPECT_LE(c.y2, h);
    const double side = std::max(box.width(), box.height());
    if (side * 1.5 <= std::min(w, h)) {
      EXPECT_NEAR(c.width(), c.height(), 1e-9);
      EXPECT_GE(c.width(), side - 1e-9);
      EXPECT_LE(c.width(), side * 1.5 + 1e-9);
    }
  }
}

// ---- pretraining

JepaConfig tiny_config() {
  JepaConfig c;
  c.grid = {1, 2, 4};
  c.input_dim = 4;
  c.dim = 8;
  c.heads = 2;
  c.encoder_depth = 1;
  c.predictor_depth = 1;
  c.block = {1, 1, 2};
  c.steps = 12;
  c.batch = 2;
  c.warmup_steps = 3;
  c.seed = 5;
  return c;
}

TEST(Pretrain, ShortRunIsDeterministicAndLogged) {
  const auto cfg = tiny_config();
  const auto stream = moving_pattern_stream(cfg, 1);
  std::size_t observed = 0;
  const auto a = run_pretrain(cfg, stream, [&](std::size_t, const PretrainResult&) { ++observed; });
  const auto b = run_pretrain(cfg, stream);
  EXPECT_FALSE(a.aborted);
  EXPECT_EQ(a.completed_steps, cfg.steps);
  EXPECT_EQ(observed, cfg.steps);
  ASSERT_EQ(a.diagnostics.size(), cfg.steps);
  for (std::size_t i = 0; i < cfg.steps; ++i) {
    EXPECT_EQ(a.diagnostics[i].loss, b.diagnostics[i].loss);
    EXPECT_GT(a.diagnostics[i].target_variance, 0.0);
  }
  EXPECT_NEAR(a.diagnostics[0].lr, cfg.lr / 3.0, 1e-15);
  EXPECT_EQ(a.diagnostics.back().lr, cfg.lr);
  const auto lines = diagnostics_to_jsonl(a.diagnostics);
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), static_cast<long>(cfg.steps));
  EXPECT_NE(lines.find("\"target_variance\":"), std::string::npos);
}

TEST(Pretrain, NonFiniteInputAbortsAndKeepsParameters) {
  const auto cfg = tiny_config();
  const auto good = moving_pattern_stream(cfg, 1);
  const ClipStream poisoned = [&](std::size_t step, std::size_t item) {
    auto t = good(step, item);
    if (step >= 5) t.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
    return t;
  };
  const auto r = run_pretrain(cfg, poisoned);
  EXPECT_TRUE(r.aborted);
  EXPECT_EQ(r.completed_steps, 4u);
  EXPECT_FALSE(r.abort_reason.empty());
  for (const auto& p : r.context_encoder.parameters())
    for (double v : p.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Pretrain, MomentumScheduleAndConfigRoundTrip) {
  auto cfg = tiny_config();
  EXPECT_EQ(cfg.momentum_at(0), cfg.ema_start);
  EXPECT_EQ(cfg.momentum_at(cfg.steps), cfg.ema_end);
  EXPECT_NEAR(cfg.momentum_at(cfg.steps / 2), (cfg.ema_start + cfg.ema_end) / 2, 1e-12);
  const auto back = JepaConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_THROW(JepaConfig::from_json({{"bogus", 1}}), ContractError);
  auto bad = cfg;
  bad.dim = 7;
  EXPECT_THROW(bad.validate(), ContractError);
  EXPECT_NO_THROW(JepaConfig::full_scale_preset().validate());
}

TEST(Pretrain, CheckpointHoldsAllThreeNetworks) {
  privi::testing::TempDir tmp("jepa");
  auto cfg = tiny_config();
  cfg.steps = 2;
  const auto r = run_pretrain(cfg, moving_pattern_stream(cfg, 2));
  save_jepa_checkpoint(tmp / "c.pvjp", cfg, r);
  const auto file = read_param_file(tmp / "c.pvjp", "PVJP");
  std::size_t expected = 0;
  for (const auto* e : {&r.context_encoder, &r.target_encoder})
    for (const auto& p : e->parameters()) expected += p.size();
  for (const auto& p : r.predictor.parameters()) expected += p.size();
  EXPECT_EQ(file.values.size(), expected);
  EXPECT_EQ(file.config, cfg.to_json());
  EXPECT_THROW(read_param_file(tmp / "c.pvjp", "PVCK"), ContractError);
}

TEST(Positions, SinCosTable) {
  const auto p = sincos_positions(5, 4);
  EXPECT_EQ(p.shape(), (nn::Shape{5, 4}));
  EXPECT_EQ(p.data()[0], 0.0);  // sin(0)
  EXPECT_EQ(p.data()[1], 1.0);  // cos(0)
  for (double v : p.data()) EXPECT_LE(std::abs(v), 1.0);
}

}  // namespace
}  // namespace privi::jepa
