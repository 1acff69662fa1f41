#include "privi/metrics/report.hpp"

#include <nlohmann/json.hpp>

#include "privi/common/io.hpp"
#include "privi/common/numfmt.hpp"

namespace privi::metrics {

std::string report_to_jsonl(const MetricReport& report) {
  std::string out;
  const std::string metric = report.task == "multi_label" ? "ap" : "recall";
  for (const auto& c : report.per_class) {
    nlohmann::ordered_json j;
    j["class"] = c.name;
    j["metric"] = metric;
    j["value"] = c.excluded ? nlohmann::ordered_json() : nlohmann::ordered_json(c.value);
    j["support"] = c.support;
    j["excluded"] = c.excluded;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json agg;
  agg["task"] = report.task;
  agg["n_samples"] = report.n_samples;
  nlohmann::ordered_json values;
  for (const auto& [k, v] : report.aggregates) values[k] = v;
  agg["aggregate"] = values;
  agg["flags"] = report.flags;
  out += agg.dump() + "\n";
  return out;
}

void write_report(const std::filesystem::path& path, const MetricReport& report) {
  write_file_atomic(path, report_to_jsonl(report));
}

std::string plot_data_csv(const std::vector<CurvePoint>& points) {
  std::string out = "fraction,mean,ci_low,ci_high\n";
  for (const auto& p : points)
    out += format_decimal(p.fraction) + "," + format_decimal(p.interval.mean) + "," +
           format_decimal(p.interval.low) + "," + format_decimal(p.interval.high) + "\n";
  return out;
}

}  // namespace privi::metrics
