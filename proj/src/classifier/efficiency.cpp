#include "privi/classifier/efficiency.hpp"

#include <algorithm>
#include <numeric>

#include "privi/classifier/train.hpp"
#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/metrics/metrics.hpp"

namespace privi::clf {

nlohmann::ordered_json EfficiencyResult::to_json() const {
  nlohmann::ordered_json runs_json = nlohmann::ordered_json::array();
  for (const auto& r : runs)
    runs_json.push_back({{"fraction", r.fraction},
                         {"repeat", r.repeat},
                         {"n_train", r.n_train},
                         {"n_sequences", r.n_sequences},
                         {"achieved_fraction", r.achieved_fraction},
                         {"deviation", r.deviation},
                         {"metric", r.metric}});
  nlohmann::ordered_json curve_json = nlohmann::ordered_json::array();
  for (const auto& p : curve)
    curve_json.push_back(
        {{"fraction", p.fraction}, {"mean", p.interval.mean}, {"ci_low", p.interval.low}, {"ci_high", p.interval.high}});
  return {{"runs", runs_json}, {"curve", curve_json}};
}

EfficiencyResult run_label_efficiency(const ClassifierConfig& config, const FeatureSet& train, const FeatureSet& test,
                                      std::span<const double> fractions, std::size_t repeats, std::uint64_t seed) {
  require(!fractions.empty(), "label efficiency: no fractions given");
  require(repeats > 0, "label efficiency: repeats must be positive");
  std::vector<double> partial;
  for (double f : fractions) {
    require(f > 0.0 && f <= 1.0, "label efficiency: fractions must lie in (0, 1]");
    if (f < 1.0) partial.push_back(f);
  }
  const auto seq_ids = train.sequence_ids();
  const auto subsets = metrics::label_efficiency_subsets(seq_ids, partial, repeats, seed);

  EfficiencyResult out;
  std::size_t next_subset = 0;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double f = fractions[fi];
    std::vector<double> values;
    const std::size_t n_runs = f < 1.0 ? repeats : 1;
    for (std::size_t r = 0; r < n_runs; ++r) {
      EfficiencyRun run;
      run.fraction = f;
      run.repeat = r;
      FeatureSet subset;
      if (f < 1.0) {
        const auto& s = subsets.at(next_subset++);
        subset = train.subset(s.samples);
        run.n_sequences = s.sequences.size();
        run.achieved_fraction = s.achieved_fraction;
        run.deviation = s.deviation;
      } else {
        subset = train;
        std::vector<std::string> distinct(seq_ids.begin(), seq_ids.end());
        std::sort(distinct.begin(), distinct.end());
        run.n_sequences = static_cast<std::size_t>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
        run.achieved_fraction = 1.0;
      }
      run.n_train = subset.samples.size();
      ClassifierConfig c = config;
      c.seed = splitmix64(config.seed ^ (fi * 0x100 + r));
      const auto trained = train_head(c, subset);
      run.metric = validation_metric(trained.model, test);
      values.push_back(run.metric);
      out.runs.push_back(run);
    }
    out.curve.push_back({f, metrics::ci95(values)});
  }
  return out;
}

}  // namespace privi::clf
