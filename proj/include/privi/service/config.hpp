#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privi/curation/fixtures.hpp"
#include "privi/curation/relevance.hpp"
#include "privi/curation/types.hpp"

namespace privi::service {

// Where a video's frames come from.
struct VideoSpec {
  std::string video_ref;
  std::string source_id;
  std::string kind = "frames_dir";  // "frames_dir" or "decoder"
  std::string path;                 // frames_dir
  std::string command;              // decoder
  double fps = 0.0;
  std::size_t frame_count = 0;      // decoder
};

// Provider selection: "synthetic" (fixture-backed), "empty" (detector only)
// or an http(s) base URL.
struct ProviderEndpoints {
  std::string embedder = "synthetic";
  std::string detector = "synthetic";
  double timeout_s = 10.0;
  int retries = 3;
  int max_in_flight = 8;
};

struct PipelineConfig {
  std::vector<curation::SourceDataset> sources;
  std::vector<VideoSpec> videos;
  // When set, every clip of the generated corpus is an input video.
  std::optional<curation::FixtureOptions> fixture;

  double cut_threshold = 27.0;
  double snippet_length_s = 3.0;
  curation::RelevanceOptions relevance;
  // Fixed operating point; when unset the trained model's selected
  // threshold applies.
  std::optional<double> relevance_threshold;
  double nms_iou = 0.5;
  double detection_score = 0.35;
  std::string detection_prompt = "primate";
  // Unset keeps every filtered snippet.
  std::optional<std::size_t> subsample_budget;
  // Defaults to the sources' target proportions.
  std::map<std::string, double> subsample_targets;
  std::vector<std::string> label_criteria;

  ProviderEndpoints providers;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string workspace;

  // Throws ContractError naming the offending key on unknown keys, wrong
  // types or out-of-range values.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  // SHA-256 of the canonical JSON form, excluding the workspace path and
  // worker count, which do not affect outputs.
  std::string hash() const;
  void validate() const;

  std::map<std::string, double> effective_targets() const;
  const curation::SourceDataset& source(const std::string& id) const;
};

nlohmann::ordered_json fixture_options_to_json(const curation::FixtureOptions& o);
curation::FixtureOptions fixture_options_from_json(const nlohmann::json& j);

}  // namespace privi::service
