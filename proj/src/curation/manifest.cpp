#include "privi/curation/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <set>

#include "privi/common/error.hpp"
#include "privi/common/io.hpp"
#include "privi/common/numfmt.hpp"

namespace privi::curation {
namespace {

using nlohmann::json;

std::string quote(std::string_view s) { return json(std::string(s)).dump(); }

template <typename T, typename F>
std::string opt_field(const std::optional<T>& v, F&& render) {
  return v ? render(*v) : std::string("null");
}

}  // namespace

std::string snippet_to_json_line(const Snippet& s) {
  std::string boxes = "[";
  for (std::size_t i = 0; i < s.boxes.size(); ++i) {
    const auto& b = s.boxes[i];
    if (i) boxes += ",";
    boxes += fmt::format(R"({{"x1":{},"y1":{},"x2":{},"y2":{},"score":{},"label":{}}})", format_decimal(b.x1),
                         format_decimal(b.y1), format_decimal(b.x2), format_decimal(b.y2), format_decimal(b.score),
                         quote(b.label));
  }
  boxes += "]";
  const auto reason = to_string(s.discard_reason);
  return fmt::format(
      R"({{"snippet_id":{},"source_id":{},"video_ref":{},"start_s":{},"end_s":{},"keyframe_time_s":{},"boxes":{},"embedding_ref":{},"relevance_score":{},"species":{},"kept":{},"discard_reason":{}}})",
      quote(s.snippet_id), quote(s.source_id), quote(s.video_ref), format_decimal(s.start_s), format_decimal(s.end_s),
      format_decimal(s.keyframe_time_s), boxes, opt_field(s.embedding_ref, quote),
      opt_field(s.relevance_score, [](double v) { return format_decimal(v); }), opt_field(s.species, quote), s.kept ? "true" : "false",
      reason.empty() ? std::string("null") : quote(reason));
}

Snippet snippet_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ContractError(std::string("manifest line is not JSON: ") + e.what());
  }
  Snippet s;
  try {
    s.snippet_id = j.at("snippet_id").get<std::string>();
    s.source_id = j.at("source_id").get<std::string>();
    s.video_ref = j.at("video_ref").get<std::string>();
    s.start_s = j.at("start_s").get<double>();
    s.end_s = j.at("end_s").get<double>();
    s.keyframe_time_s = j.at("keyframe_time_s").get<double>();
    for (const auto& b : j.at("boxes"))
      s.boxes.push_back({b.at("x1").get<double>(), b.at("y1").get<double>(), b.at("x2").get<double>(),
                         b.at("y2").get<double>(), b.at("score").get<double>(), b.at("label").get<std::string>()});
    if (!j.at("embedding_ref").is_null()) s.embedding_ref = j["embedding_ref"].get<std::string>();
    if (!j.at("relevance_score").is_null()) s.relevance_score = j["relevance_score"].get<double>();
    if (!j.at("species").is_null()) s.species = j["species"].get<std::string>();
    s.kept = j.at("kept").get<bool>();
    s.discard_reason =
        j.at("discard_reason").is_null() ? DiscardReason::none : parse_discard_reason(j["discard_reason"].get<std::string>());
  } catch (const json::exception& e) {
    throw ContractError(std::string("manifest record malformed: ") + e.what());
  }
  require(s.kept == (s.discard_reason == DiscardReason::none),
          "manifest record '" + s.snippet_id + "': kept and discard_reason disagree");
  return s;
}

std::string manifest_to_jsonl(const std::vector<Snippet>& snippets) {
  std::string out;
  for (const auto& s : snippets) out += snippet_to_json_line(s) + "\n";
  return out;
}

std::vector<Snippet> manifest_from_jsonl(std::string_view text) {
  std::vector<Snippet> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (!line.empty()) out.push_back(snippet_from_json_line(line));
    pos = end + 1;
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<Snippet>& snippets) {
  write_file_atomic(path, manifest_to_jsonl(snippets));
}

std::vector<Snippet> read_manifest(const std::filesystem::path& path) { return manifest_from_jsonl(read_file(path)); }

std::string sources_to_json(const std::vector<SourceDataset>& sources) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : sources) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["setting"] = std::string(to_string(s.setting));
    j["species"] = s.species;
    j["diversity"] = std::string(to_string(s.diversity));
    j["target_proportion"] = s.target_proportion;
    j["chunk_stride_s"] = s.chunk_stride_s;
    arr.push_back(j);
  }
  return arr.dump();
}

std::vector<SourceDataset> sources_from_json(std::string_view text) {
  std::vector<SourceDataset> out;
  const auto arr = json::parse(text);
  for (const auto& j : arr) {
    SourceDataset s;
    s.id = j.at("id").get<std::string>();
    s.setting = parse_setting(j.at("setting").get<std::string>());
    s.species = j.at("species").get<std::vector<std::string>>();
    s.diversity = parse_diversity(j.value("diversity", std::string("high")));
    s.target_proportion = j.value("target_proportion", 0.0);
    s.chunk_stride_s = j.value("chunk_stride_s", 2.0);
    out.push_back(std::move(s));
  }
  validate_sources(out);
  return out;
}

std::string CompositionReport::to_json() const {
  nlohmann::ordered_json j;
  j["unique_hours"] = unique_hours;
  j["kept_snippets"] = kept_snippets;
  j["total_snippets"] = total_snippets;
  j["species_percent"] = species_percent;
  j["setting_percent"] = setting_percent;
  j["source_counts"] = source_counts;
  return j.dump();
}

std::string CompositionReport::to_table() const {
  std::string out = fmt::format("Unique hours      {:>10.2f}\nSnippets (kept)   {:>10}\nSnippets (total)  {:>10}\n",
                                unique_hours, kept_snippets, total_snippets);
  out += "\nSpecies                     %\n";
  for (const auto& [k, v] : species_percent) out += fmt::format("  {:<20} {:>6.1f}\n", k, v);
  out += "\nSetting                     %\n";
  for (const auto& [k, v] : setting_percent) out += fmt::format("  {:<20} {:>6.1f}\n", k, v);
  out += "\nSource                  count\n";
  for (const auto& [k, v] : source_counts) out += fmt::format("  {:<20} {:>6}\n", k, v);
  return out;
}

ManifestBuild build_manifest(std::vector<Snippet> snippets, const std::vector<SourceDataset>& sources) {
  std::map<std::string, const SourceDataset*> by_id;
  for (const auto& s : sources) by_id[s.id] = &s;

  std::set<std::string> ids;
  std::map<std::string, std::vector<std::pair<double, double>>> intervals;
  CompositionReport rep;
  rep.total_snippets = snippets.size();
  std::map<std::string, std::size_t> species_counts, setting_counts;
  for (const auto& s : snippets) {
    require(ids.insert(s.snippet_id).second, "duplicate snippet_id '" + s.snippet_id + "'");
    require(s.start_s >= 0 && s.start_s < s.end_s, "snippet '" + s.snippet_id + "' has an empty interval");
    require(std::abs(s.keyframe_time_s - 0.5 * (s.start_s + s.end_s)) < 1e-6,
            "snippet '" + s.snippet_id + "' keyframe is not centered");
    require(s.kept == (s.discard_reason == DiscardReason::none),
            "snippet '" + s.snippet_id + "' must carry exactly one discard reason when discarded");
    if (!s.kept) continue;
    ++rep.kept_snippets;
    intervals[s.video_ref].push_back({s.start_s, s.end_s});
    ++species_counts[s.species.value_or("unlabeled")];
    const auto src = by_id.find(s.source_id);
    ++setting_counts[src == by_id.end() ? std::string("unknown") : std::string(to_string(src->second->setting))];
    ++rep.source_counts[s.source_id];
  }
  double seconds = 0.0;
  for (auto& [video, iv] : intervals) {
    std::sort(iv.begin(), iv.end());
    double cur_start = iv.front().first, cur_end = iv.front().second;
    for (std::size_t i = 1; i < iv.size(); ++i) {
      if (iv[i].first <= cur_end) {
        cur_end = std::max(cur_end, iv[i].second);
      } else {
        seconds += cur_end - cur_start;
        cur_start = iv[i].first;
        cur_end = iv[i].second;
      }
    }
    seconds += cur_end - cur_start;
  }
  rep.unique_hours = seconds / 3600.0;
  const double kept = static_cast<double>(rep.kept_snippets);
  for (const auto& [k, v] : species_counts) rep.species_percent[k] = 100.0 * static_cast<double>(v) / kept;
  for (const auto& [k, v] : setting_counts) rep.setting_percent[k] = 100.0 * static_cast<double>(v) / kept;

  ManifestBuild out;
  out.manifest.snippets = std::move(snippets);
  out.manifest.sources = sources;
  out.report = std::move(rep);
  return out;
}

}  // namespace privi::curation
