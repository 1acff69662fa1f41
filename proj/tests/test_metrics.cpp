#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/metrics/metrics.hpp"
#include "privi/metrics/report.hpp"

namespace privi::metrics {
namespace {

PredictionRecord single(std::vector<double> scores, std::size_t label) {
  PredictionRecord r;
  r.scores = std::move(scores);
  r.label = label;
  return r;
}

// Calls f(scores, truth) for every truth vector and every score vector over
// `levels` distinct values, for all lengths 1..max_n.
template <typename F>
void enumerate_binary(std::size_t max_n, std::size_t levels, F f) {
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::size_t score_combos = 1;
    for (std::size_t i = 0; i < n; ++i) score_combos *= levels;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t code = 0; code < score_combos; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= levels) s[i] = static_cast<double>(c % levels) * 0.25;
      for (std::size_t mask = 0; mask < (1u << n); ++mask) {
        for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1;
        f(s, y);
      }
    }
  }
}

TEST(Accuracy, Examples) {
  std::vector<PredictionRecord> p{single({0.9, 0.1}, 0), single({0.2, 0.8}, 0), single({0.4, 0.6}, 1),
                                  single({0.3, 0.7}, 1)};
  EXPECT_DOUBLE_EQ(accuracy(p), 0.75);
  EXPECT_DOUBLE_EQ(balanced_accuracy(p), 0.75);
  p.push_back(single({0.1, 0.9}, 1));
  EXPECT_DOUBLE_EQ(accuracy(p), 0.8);
  EXPECT_DOUBLE_EQ(balanced_accuracy(p), (0.5 + 1.0) / 2);
}

TEST(Accuracy, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5, 0.1}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.5, 0.5}), 1u);
}

TEST(Accuracy, ZeroSupportClassesAreExcludedAndFlagged) {
  std::vector<PredictionRecord> p{single({0.9, 0.1, 0.0}, 0), single({0.1, 0.9, 0.0}, 1)};
  const auto rep = single_label_report(p, 3, {"a", "b", "c"});
  EXPECT_TRUE(rep.per_class[2].excluded);
  EXPECT_EQ(rep.flags, std::vector<std::string>{"zero_support:c"});
  EXPECT_DOUBLE_EQ(rep.aggregates.at("b_acc"), 1.0);
}

TEST(BalancedAccuracy, MatchesOracleExhaustively) {
  // Every (truth, prediction) pair over 3 classes up to 5 samples, with a
  // tie in the scores whenever the prediction is 0.
  for (std::size_t n = 1; n <= 5; ++n) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < 2 * n; ++i) combos *= 3;
    for (std::size_t code = 0; code < combos; ++code) {
      std::size_t c = code;
      std::vector<std::size_t> truth(n);
      std::vector<std::vector<double>> scores(n, std::vector<double>(3, 0.0));
      std::vector<PredictionRecord> preds;
      for (std::size_t i = 0; i < n; ++i) {
        truth[i] = c % 3;
        c /= 3;
        const std::size_t pred = c % 3;
        c /= 3;
        scores[i][pred] = 1.0;
        if (pred == 0) scores[i][2] = 1.0;
        preds.push_back(single(scores[i], truth[i]));
      }
      ASSERT_NEAR(balanced_accuracy(preds), oracle::balanced_accuracy(scores, truth, 3), 1e-12);
    }
  }
}

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{0.5, 0.6}, std::vector<int>{1, 1}), ContractError);
}

TEST(Auc, MatchesPairwiseOracleExhaustively) {
  enumerate_binary(6, 3, [](const std::vector<double>& s, const std::vector<int>& y) {
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<long>(y.size())) return;
    ASSERT_NEAR(roc_auc(s, y), oracle::auc(s, y), 1e-12);
  });
}

TEST(AveragePrecision, Examples) {
  // Ranked positives at 1 and 3: (1 + 2/3) / 2.
  EXPECT_NEAR(*average_precision(std::vector<double>{0.9, 0.8, 0.7, 0.1}, std::vector<int>{1, 0, 1, 0}),
              (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(*average_precision(std::vector<double>{0.3, 0.2}, std::vector<int>{1, 1}), 1.0);
  EXPECT_FALSE(average_precision(std::vector<double>{0.3, 0.2}, std::vector<int>{0, 0}).has_value());
}

TEST(AveragePrecision, MatchesOracleExhaustively) {
  enumerate_binary(6, 3, [](const std::vector<double>& s, const std::vector<int>& y) {
    const auto got = average_precision(s, y);
    const auto want = oracle::average_precision(s, y);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (got) {
      ASSERT_NEAR(*got, *want, 1e-12);
    }
  });
}

TEST(AveragePrecision, MatchesOracleOnRandomLargerInstances) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 9 + rng.index(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 20) / 20;
      y[i] = rng.bernoulli(0.4);
    }
    const auto got = average_precision(s, y);
    const auto want = oracle::average_precision(s, y);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (got) {
      EXPECT_NEAR(*got, *want, 1e-9);
    }
    if (std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0) {
      EXPECT_NEAR(roc_auc(s, y), oracle::auc(s, y), 1e-9);
    }
  }
}

TEST(MapReport, ExcludesClassesWithoutPositives) {
  std::vector<PredictionRecord> p(3);
  p[0].scores = {0.9, 0.1, 0.3};
  p[0].labels = {1, 0, 0};
  p[1].scores = {0.2, 0.8, 0.4};
  p[1].labels = {0, 1, 0};
  p[2].scores = {0.6, 0.7, 0.1};
  p[2].labels = {1, 1, 0};
  const auto rep = map_report(p, 3, {"a", "b", "c"});
  EXPECT_TRUE(rep.per_class[2].excluded);
  EXPECT_EQ(rep.flags, std::vector<std::string>{"no_positives:c"});
  const double ap_a = *oracle::average_precision({0.9, 0.2, 0.6}, {1, 0, 1});
  const double ap_b = *oracle::average_precision({0.1, 0.8, 0.7}, {0, 1, 1});
  EXPECT_NEAR(rep.aggregates.at("map"), (ap_a + ap_b) / 2, 1e-12);
  EXPECT_NEAR(rep.aggregates.at("map_w"), (2 * ap_a + 2 * ap_b) / 4, 1e-12);
}

TEST(PrCurve, PointsAreConsistent) {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.4, 0.2};
  const std::vector<int> y{1, 0, 1, 1, 0};
  const auto curve = pr_curve(s, y);
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_DOUBLE_EQ(curve.front().threshold, 0.2);
  EXPECT_DOUBLE_EQ(curve.front().recall, 1.0);
  EXPECT_DOUBLE_EQ(curve.front().fpr, 1.0);
  EXPECT_DOUBLE_EQ(curve[2].threshold, 0.8);
  EXPECT_DOUBLE_EQ(curve[2].precision, 2.0 / 3.0);
  EXPECT_EQ(curve[2].predicted_positive, 3u);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LT(curve[i - 1].threshold, curve[i].threshold);
}

TEST(KFold, EverySampleTestedOnceAndSequencesStayWhole) {
  std::vector<std::string> seq;
  for (int i = 0; i < 53; ++i) seq.push_back("s" + std::to_string(i % 17));
  const auto folds = kfold_splits(seq, 5, true, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<int> seen(seq.size(), 0);
  for (const auto& f : folds) {
    std::set<std::string> test_seqs;
    for (auto i : f.test) {
      ++seen[i];
      test_seqs.insert(seq[i]);
    }
    for (auto i : f.train) EXPECT_EQ(test_seqs.count(seq[i]), 0u);
    EXPECT_EQ(f.train.size() + f.test.size(), seq.size());
  }
  for (int c : seen) EXPECT_EQ(c, 1);
  EXPECT_EQ(kfold_splits(seq, 5, true, 3)[2].test, folds[2].test);
  EXPECT_THROW(kfold_splits(seq, 18, true, 3), ContractError);
}

TEST(LabelEfficiencySubsets, WholeSequencesNearTarget) {
  std::vector<std::string> seq;
  Rng rng(5);
  for (int s = 0; s < 400; ++s)
    for (std::size_t k = 0, n = 1 + rng.index(6); k < n; ++k) seq.push_back("q" + std::to_string(s));
  const std::vector<double> fractions{0.5, 0.25, 0.1};
  const auto subsets = label_efficiency_subsets(seq, fractions, 3, 9);
  ASSERT_EQ(subsets.size(), 9u);
  for (const auto& s : subsets) {
    std::set<std::string> chosen(s.sequences.begin(), s.sequences.end());
    std::size_t members = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) members += chosen.count(seq[i]);
    EXPECT_EQ(members, s.samples.size());
    EXPECT_NEAR(s.achieved_fraction, s.fraction, 0.02);
    EXPECT_FALSE(s.deviation);
  }
  EXPECT_NE(subsets[0].sequences, subsets[1].sequences);
}

TEST(LabelEfficiencySubsets, TinyFractionFlagsDeviation) {
  const std::vector<std::string> seq(10, "only");
  const std::vector<double> fractions{0.1};
  const auto s = label_efficiency_subsets(seq, fractions, 1, 0);
  EXPECT_TRUE(s[0].deviation);
  EXPECT_EQ(s[0].samples.size(), 10u);
}

TEST(Ci95, HandComputed) {
  const std::vector<double> v{1, 2, 3};
  const auto ci = ci95(v);
  EXPECT_DOUBLE_EQ(ci.mean, 2.0);
  EXPECT_NEAR(ci.high - ci.mean, 1.96 * 1.0 / std::sqrt(3.0), 1e-12);
  const std::vector<double> one{0.7};
  EXPECT_DOUBLE_EQ(ci95(one).low, 0.7);
}

TEST(Report, JsonlAndCsvLayout) {
  std::vector<PredictionRecord> p{single({0.9, 0.1}, 0), single({0.2, 0.8}, 1)};
  const auto text = report_to_jsonl(single_label_report(p, 2, {"x", "y"}));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("\"class\":\"x\""), std::string::npos);
  EXPECT_NE(text.find("\"b_acc\":1.0"), std::string::npos);
  const auto csv = plot_data_csv({{0.5, {0.8, 0.7, 0.9}}});
  EXPECT_EQ(csv, "fraction,mean,ci_low,ci_high\n0.5,0.8,0.7,0.9\n");
}

}  // namespace
}  // namespace privi::metrics
