#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "privi/metrics/metrics.hpp"

namespace privi::metrics {

// One JSON line per class, then one aggregate line.
std::string report_to_jsonl(const MetricReport& report);
void write_report(const std::filesystem::path& path, const MetricReport& report);

struct CurvePoint {
  double fraction = 0.0;
  Interval interval;
};

// CSV with header "fraction,mean,ci_low,ci_high".
std::string plot_data_csv(const std::vector<CurvePoint>& points);

}  // namespace privi::metrics
