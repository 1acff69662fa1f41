#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "privi/common/error.hpp"
#include "privi/numerics/attention.hpp"
#include "privi/numerics/losses.hpp"
#include "privi/numerics/ops.hpp"
#include "privi/numerics/optim.hpp"

namespace privi::nn {
namespace {

using privi::testing::gradient_error;
using privi::testing::random_tensor;
using Inputs = std::vector<Tensor>;

constexpr int kInstances = 20;
constexpr double kStep = 1e-4;

// Scalarizes t against a fixed random weighting so every output element
// contributes to the checked gradient.
Tensor project(const Tensor& t, std::uint64_t seed) {
  Rng rng(seed, 99);
  return sum(mul(t, random_tensor(t.shape(), rng, 1.0, false)));
}

template <typename Make, typename F>
void check_op(const char* name, Make make, F f, double tol = 1e-4) {
  for (int i = 0; i < kInstances; ++i) {
    Rng rng(1000 + i, 5);
    Inputs in = make(rng);
    const double err = gradient_error([&](const Inputs& x) { return project(f(x), i); }, in, kStep);
    EXPECT_LE(err, tol) << name << " instance " << i;
  }
}

TEST(Linear, Examples) {
  auto y = linear(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 2}, {1, 0, 0, 1}), Tensor::from({2}, {0, 0}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{1, 2}));
  y = linear(Tensor::from({1, 2}, {1, 1}), Tensor::from({2, 1}, {2, 3}), Tensor::from({1}, {1}));
  EXPECT_DOUBLE_EQ(y[0], 6.0);
}

TEST(Linear, ShapeMismatchIsContractError) {
  EXPECT_THROW(linear(Tensor::zeros({2, 3}), Tensor::zeros({2, 2}), Tensor::zeros({2})), ContractError);
}

TEST(LayerNorm, Examples) {
  auto y = layer_norm(Tensor::from({3}, {1, 1, 1}), Tensor::full({3}, 1), Tensor::zeros({3}));
  for (double v : y.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  y = layer_norm(Tensor::from({2}, {-1, 1}), Tensor::full({2}, 1), Tensor::zeros({2}), 1e-12);
  EXPECT_NEAR(y[0], -1.0, 1e-9);
  EXPECT_NEAR(y[1], 1.0, 1e-9);
}

TEST(Gelu, KnownValues) {
  auto y = gelu(Tensor::from({3}, {0.0, 1.0, -1.0}));
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 0.5 * (1 + std::erf(1 / std::numbers::sqrt2)), 1e-15);
  EXPECT_NEAR(y[2], -0.5 * (1 - std::erf(1 / std::numbers::sqrt2)), 1e-15);
}

TEST(Softmax, RowsAreDistributions) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    auto y = softmax_rows(random_tensor({4, 7}, rng, 10.0));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        EXPECT_GE(y[r * 7 + c], 0.0);
        s += y[r * 7 + c];
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Gradients, ElementwiseAndMatrixOps) {
  check_op("matmul", [](Rng& r) { return Inputs{random_tensor({3, 4}, r), random_tensor({4, 2}, r)}; },
           [](const Inputs& x) { return matmul(x[0], x[1]); });
  check_op("linear",
           [](Rng& r) { return Inputs{random_tensor({3, 4}, r), random_tensor({4, 2}, r), random_tensor({2}, r)}; },
           [](const Inputs& x) { return linear(x[0], x[1], x[2]); });
  check_op("add", [](Rng& r) { return Inputs{random_tensor({2, 3}, r), random_tensor({2, 3}, r)}; },
           [](const Inputs& x) { return add(x[0], x[1]); });
  check_op("sub", [](Rng& r) { return Inputs{random_tensor({2, 3}, r), random_tensor({2, 3}, r)}; },
           [](const Inputs& x) { return sub(x[0], x[1]); });
  check_op("mul", [](Rng& r) { return Inputs{random_tensor({2, 3}, r), random_tensor({2, 3}, r)}; },
           [](const Inputs& x) { return mul(x[0], x[1]); });
  check_op("add_row", [](Rng& r) { return Inputs{random_tensor({3, 4}, r), random_tensor({4}, r)}; },
           [](const Inputs& x) { return add_row(x[0], x[1]); });
  check_op("scale", [](Rng& r) { return Inputs{random_tensor({3, 2}, r)}; },
           [](const Inputs& x) { return scale(x[0], -2.5); });
  check_op("layer_norm",
           [](Rng& r) { return Inputs{random_tensor({2, 5}, r), random_tensor({5}, r), random_tensor({5}, r)}; },
           [](const Inputs& x) { return layer_norm(x[0], x[1], x[2]); });
  check_op("gelu", [](Rng& r) { return Inputs{random_tensor({3, 3}, r, 2.0)}; },
           [](const Inputs& x) { return gelu(x[0]); });
  check_op("sigmoid", [](Rng& r) { return Inputs{random_tensor({3, 3}, r, 2.0)}; },
           [](const Inputs& x) { return sigmoid(x[0]); });
  check_op("softmax_rows", [](Rng& r) { return Inputs{random_tensor({3, 5}, r, 2.0)}; },
           [](const Inputs& x) { return softmax_rows(x[0]); });
  check_op("slice_rows", [](Rng& r) { return Inputs{random_tensor({5, 3}, r)}; },
           [](const Inputs& x) { return slice_rows(x[0], 1, 3); });
  check_op("gather_rows", [](Rng& r) { return Inputs{random_tensor({5, 3}, r)}; },
           [](const Inputs& x) {
             const std::vector<std::size_t> rows{4, 0, 4, 2};
             return gather_rows(x[0], rows);
           });
  check_op("concat_rows", [](Rng& r) { return Inputs{random_tensor({2, 3}, r), random_tensor({4, 3}, r)}; },
           [](const Inputs& x) { return concat_rows(x); });
  check_op("reshape", [](Rng& r) { return Inputs{random_tensor({2, 6}, r)}; },
           [](const Inputs& x) { return reshape(x[0], {3, 4}); });
  check_op("mean", [](Rng& r) { return Inputs{random_tensor({2, 6}, r)}; },
           [](const Inputs& x) { return scale(mean(x[0]), 3.0); });
  check_op("rowwise_dot",
           [](Rng& r) { return Inputs{random_tensor({3, 4}, r), random_tensor({3, 4}, r), random_tensor({3}, r)}; },
           [](const Inputs& x) { return rowwise_dot(x[0], x[1], x[2]); });
  check_op("multi_head_attention",
           [](Rng& r) {
             return Inputs{random_tensor({4, 8}, r), random_tensor({8, 24}, r, 0.3), random_tensor({24}, r, 0.1),
                           random_tensor({8, 8}, r, 0.3), random_tensor({8}, r, 0.1)};
           },
           [](const Inputs& x) { return multi_head_attention(x[0], x[1], x[2], x[3], x[4], 2); }, 1e-3);
}

TEST(Gradients, Losses) {
  check_op("cross_entropy", [](Rng& r) { return Inputs{random_tensor({5}, r, 2.0)}; },
           [](const Inputs& x) { return cross_entropy(x[0], 3); });
  check_op("binary_cross_entropy", [](Rng& r) { return Inputs{random_tensor({4}, r, 2.0)}; },
           [](const Inputs& x) {
             const std::vector<double> t{1, 0, 0, 1};
             return binary_cross_entropy(x[0], t);
           });
  check_op("l1", [](Rng& r) { return Inputs{random_tensor({3, 4}, r), random_tensor({3, 4}, r)}; },
           [](const Inputs& x) { return l1_loss(x[0], x[1]); });
  const std::vector<double> freqs{0.5, 0.3, 0.15, 0.05};
  check_op("equalization_loss", [](Rng& r) { return Inputs{random_tensor({4}, r, 2.0)}; },
           [&](const Inputs& x) { return equalization_loss(x[0], 1, freqs, 0.2); });
  check_op("equalization_loss_multi", [](Rng& r) { return Inputs{random_tensor({4}, r, 2.0)}; },
           [&](const Inputs& x) {
             const std::vector<double> t{0, 1, 0, 0};
             return equalization_loss_multi(x[0], t, freqs, 0.2);
           });
}

TEST(Gradients, SelfAttentionBlock) {
  for (int i = 0; i < kInstances; ++i) {
    Rng rng(500 + i);
    auto block = SelfAttentionBlock::create(8, 2, rng, 0.3);
    Inputs in{random_tensor({4, 8}, rng)};
    for (const auto& p : block.parameters()) in.push_back(p);
    const double err = gradient_error([&](const Inputs& x) { return project(block.forward(x[0]), i); }, in, kStep);
    EXPECT_LE(err, 1e-3) << "instance " << i;
  }
}

TEST(SelfAttentionBlock, ZeroWeightsAreIdentity) {
  Rng rng(1);
  auto block = SelfAttentionBlock::create(8, 2, rng);
  for (auto& p : block.parameters()) {
    if (p.node() == block.ln1_gamma.node() || p.node() == block.ln2_gamma.node()) continue;
    for (auto& v : const_cast<Tensor&>(p).mutable_data()) v = 0.0;
  }
  const auto x = random_tensor({5, 8}, rng);
  const auto y = block.forward(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], x[i]);
}

TEST(SelfAttentionBlock, ShapeAndHeadChecks) {
  Rng rng(2);
  auto block = SelfAttentionBlock::create(64, 8, rng);
  EXPECT_EQ(block.forward(Tensor::zeros({9 + 196, 64})).shape(), (Shape{205, 64}));
  EXPECT_THROW(SelfAttentionBlock::create(10, 3, rng), ContractError);
  EXPECT_EQ(SelfAttentionBlock::parameter_count(64), 49984u);
  EXPECT_EQ(count_parameters(block.parameters()), 49984u);
}

TEST(Losses, Examples) {
  for (std::size_t c : {2u, 5u, 23u}) EXPECT_NEAR(cross_entropy(Tensor::zeros({c}), 0).item(), std::log(c), 1e-12);
  Rng rng(4);
  const auto x = random_tensor({3, 4}, rng);
  EXPECT_EQ(l1_loss(x, x).item(), 0.0);
  EXPECT_THROW(cross_entropy(Tensor::zeros({3}), 3), ContractError);
}

TEST(Losses, EqualizationWithZeroLambdaIsCrossEntropy) {
  Rng rng(8);
  const std::vector<double> freqs{0.7, 0.2, 0.1};
  for (int i = 0; i < 20; ++i) {
    const auto z = random_tensor({3}, rng, 3.0);
    EXPECT_EQ(equalization_loss(z, i % 3, freqs, 0.0).item(), cross_entropy(z, i % 3).item());
    const std::vector<double> t{1.0 * (i % 2), 0.0, 1.0};
    EXPECT_EQ(equalization_loss_multi(z, t, freqs, 0.0).item(), binary_cross_entropy(z, t).item());
  }
}

TEST(Losses, EqualizationSuppressesRareNegativeGradients) {
  const std::vector<double> freqs{0.7, 0.25, 0.05};
  auto z = Tensor::from({3}, {0.3, -0.2, 1.1}, true);
  equalization_loss(z, 0, freqs, 0.1).backward();
  EXPECT_EQ(z.grad()[2], 0.0);
  EXPECT_GT(z.grad()[1], 0.0);
  // The ground-truth class keeps its gradient even when rare.
  auto w = Tensor::from({3}, {0.3, -0.2, 1.1}, true);
  equalization_loss(w, 2, freqs, 0.1).backward();
  EXPECT_LT(w.grad()[2], 0.0);
}

TEST(Schedule, Endpoints) {
  const auto s = LrSchedule::warmup_cosine(1e-3, 1000, 0.1, 0.05);
  EXPECT_EQ(s.lr_at(0), 0.0);
  EXPECT_DOUBLE_EQ(s.lr_at(100), 1e-3);
  EXPECT_DOUBLE_EQ(s.lr_at(1000), 0.05 * 1e-3);
  EXPECT_DOUBLE_EQ(s.lr_at(50), 0.5e-3);
  const auto c = LrSchedule::constant(2e-4, 10);
  EXPECT_DOUBLE_EQ(c.lr_at(5), 1e-4);
  EXPECT_DOUBLE_EQ(c.lr_at(10), 2e-4);
  EXPECT_DOUBLE_EQ(c.lr_at(1000000), 2e-4);
}

TEST(Schedule, CosineIsMonotoneAfterWarmup) {
  const auto s = LrSchedule::warmup_cosine(1.0, 500, 0.2);
  for (std::size_t t = 100; t < 500; ++t) EXPECT_GE(s.lr_at(t), s.lr_at(t + 1));
}

TEST(Adam, FirstStepHandComputed) {
  // m = (1 - b1) g, v = (1 - b2) g^2; bias correction restores g and g^2,
  // so the step is lr * g / (|g| + eps).
  const double lr = 0.01;
  auto p = Tensor::from({1}, {0.5}, true);
  Adam opt({p}, LrSchedule::constant(lr));
  p.mutable_grad()[0] = 1.0;
  opt.step();
  const double m_hat = (1 - 0.9) * 1.0 / (1 - 0.9);
  const double v_hat = (1 - 0.999) * 1.0 / (1 - 0.999);
  EXPECT_NEAR(p[0], 0.5 - lr * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
  EXPECT_EQ(opt.state().step, 1u);
}

TEST(Adam, NonFiniteGradientAbortsStep) {
  auto p = Tensor::from({2}, {1.0, 2.0}, true);
  Adam opt({p}, LrSchedule::constant(0.1));
  p.mutable_grad()[0] = 1.0;
  p.mutable_grad()[1] = std::nan("");
  EXPECT_THROW(opt.step(), FaultError);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 2.0);
  EXPECT_EQ(opt.state().step, 0u);
}

TEST(Adam, RefusesToStepPastSchedule) {
  auto p = Tensor::from({1}, {0.0}, true);
  Adam opt({p}, LrSchedule::warmup_cosine(0.1, 2, 0.0));
  p.mutable_grad()[0] = 1.0;
  opt.step();
  opt.step();
  EXPECT_THROW(opt.step(), ContractError);
}

TEST(Adam, ClipNormScalesGradients) {
  auto a = Tensor::from({1}, {0.0}, true);
  auto b = Tensor::from({1}, {0.0}, true);
  AdamOptions o;
  o.clip_norm = 1.0;
  Adam clipped({a}, LrSchedule::constant(0.1), o);
  Adam plain({b}, LrSchedule::constant(0.1));
  a.mutable_grad()[0] = 100.0;
  b.mutable_grad()[0] = 100.0;
  clipped.step();
  plain.step();
  // Adam is scale invariant on the first step, so only the moments differ.
  EXPECT_NEAR(a[0], b[0], 1e-9);
  EXPECT_NEAR(clipped.state().first_moment[0][0], 0.1, 1e-12);
}

TEST(Tensor, CloneAndDetach) {
  auto a = Tensor::from({2}, {1, 2}, true);
  auto alias = a;
  auto copy = a.clone();
  a.mutable_data()[0] = 5;
  EXPECT_EQ(alias[0], 5);
  EXPECT_EQ(copy[0], 1);
  EXPECT_TRUE(copy.requires_grad());
  auto d = a.detach();
  EXPECT_FALSE(d.requires_grad());
  auto loss = sum(mul(a, d));
  loss.backward();
  EXPECT_EQ(a.grad()[0], 5);
  EXPECT_EQ(a.grad()[1], 2);
}

TEST(Tensor, GradientsAccumulateAcrossUses) {
  auto x = Tensor::from({1}, {3.0}, true);
  sum(add(mul(x, x), x)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Dropout, IdentityOutsideTraining) {
  Rng rng(1);
  const auto x = random_tensor({10, 10}, rng);
  const auto y = dropout(x, 0.5, rng, false);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
  const auto ones = Tensor::full({100, 100}, 1.0);
  const auto z = dropout(ones, 0.25, rng, true);
  std::size_t zeros = 0;
  for (double v : z.data()) {
    if (v == 0.0) ++zeros;
    else EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
  }
  EXPECT_NEAR(zeros / 10000.0, 0.25, 0.02);
}

TEST(Rng, SameSeedAndStreamReproduce) {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

}  // namespace
}  // namespace privi::nn
