#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/metrics/metrics.hpp"

namespace privi::metrics {
namespace {

struct Group {
  std::string id;
  std::vector<std::size_t> members;
};

// Groups in first-appearance order.
std::vector<Group> group_samples(std::span<const std::string> sequence_ids, bool by_sequence) {
  std::vector<Group> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sequence_ids.size(); ++i) {
    if (!by_sequence) {
      groups.push_back({std::to_string(i), {i}});
      continue;
    }
    require(!sequence_ids[i].empty(), "sample " + std::to_string(i) + " has no sequence id");
    auto [it, inserted] = index.try_emplace(sequence_ids[i], groups.size());
    if (inserted) groups.push_back({sequence_ids[i], {}});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

}  // namespace

std::vector<Fold> kfold_splits(std::span<const std::string> sequence_ids, std::size_t k, bool by_sequence,
                               std::uint64_t seed) {
  require(k >= 2, "kfold_splits: k must be at least 2");
  auto groups = group_samples(sequence_ids, by_sequence);
  require(k <= groups.size(), "kfold_splits: k=" + std::to_string(k) + " exceeds the " +
                                  std::to_string(groups.size()) + " available groups");
  Rng rng(seed, 0xf01d);
  std::shuffle(groups.begin(), groups.end(), rng.engine());
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) { return a.members.size() > b.members.size(); });

  std::vector<std::vector<std::size_t>> test(k);
  for (const auto& g : groups) {
    std::size_t target = 0;
    for (std::size_t f = 1; f < k; ++f)
      if (test[f].size() < test[target].size()) target = f;
    test[target].insert(test[target].end(), g.members.begin(), g.members.end());
  }
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    folds[f].test = test[f];
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) folds[f].train.insert(folds[f].train.end(), test[g].begin(), test[g].end());
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

std::vector<Subset> label_efficiency_subsets(std::span<const std::string> sequence_ids,
                                             std::span<const double> fractions, std::size_t n_repeats,
                                             std::uint64_t seed) {
  require(!sequence_ids.empty(), "label_efficiency_subsets: empty training set");
  require(n_repeats >= 1, "label_efficiency_subsets: need at least one repeat");
  const auto groups = group_samples(sequence_ids, true);
  const double total = static_cast<double>(sequence_ids.size());
  std::vector<Subset> out;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double fraction = fractions[fi];
    require(fraction > 0.0 && fraction <= 1.0, "label_efficiency_subsets: fraction must be in (0, 1]");
    const double target = fraction * total;
    for (std::size_t r = 0; r < n_repeats; ++r) {
      std::vector<std::size_t> order(groups.size());
      std::iota(order.begin(), order.end(), 0);
      Rng rng(seed, (fi << 16) | r);
      std::shuffle(order.begin(), order.end(), rng.engine());

      Subset s;
      s.fraction = fraction;
      s.repeat = r;
      double count = 0.0;
      std::vector<std::size_t> chosen;
      for (std::size_t g : order) {
        const double size = static_cast<double>(groups[g].members.size());
        if (std::abs(count + size - target) < std::abs(count - target)) {
          chosen.push_back(g);
          count += size;
        }
      }
      if (chosen.empty()) {
        chosen.push_back(order.front());
        s.deviation = true;
      }
      for (std::size_t g : chosen) {
        s.sequences.push_back(groups[g].id);
        s.samples.insert(s.samples.end(), groups[g].members.begin(), groups[g].members.end());
      }
      std::sort(s.samples.begin(), s.samples.end());
      std::sort(s.sequences.begin(), s.sequences.end());
      s.achieved_fraction = static_cast<double>(s.samples.size()) / total;
      out.push_back(std::move(s));
    }
  }
  return out;
}

Interval ci95(std::span<const double> values) {
  require(!values.empty(), "ci95: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  const double half = 1.96 * sd / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

}  // namespace privi::metrics
