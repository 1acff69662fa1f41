#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privi/providers/types.hpp"

namespace privi::curation {

enum class Setting { wild, semi_free, captive };
enum class Diversity { low, high };

std::string_view to_string(Setting s);
std::string_view to_string(Diversity d);
Setting parse_setting(std::string_view s);
Diversity parse_diversity(std::string_view s);

struct SourceDataset {
  std::string id;
  Setting setting = Setting::wild;
  std::vector<std::string> species;
  Diversity diversity = Diversity::high;
  double target_proportion = 0.0;
  double chunk_stride_s = 2.0;
};

// Throws ContractError on out-of-range stride/proportions, duplicate ids or
// target proportions summing above 1.
void validate_sources(const std::vector<SourceDataset>& sources);

enum class DiscardReason { none, cut_overlap, irrelevant, no_detection, subsampled_out };

std::string_view to_string(DiscardReason r);
DiscardReason parse_discard_reason(std::string_view s);

struct Snippet {
  std::string snippet_id;
  std::string source_id;
  std::string video_ref;
  double start_s = 0;
  double end_s = 0;
  double keyframe_time_s = 0;
  std::vector<DetectionBox> boxes;
  std::optional<std::string> embedding_ref;
  std::optional<double> relevance_score;
  std::optional<std::string> species;
  bool kept = true;
  DiscardReason discard_reason = DiscardReason::none;

  // First discard wins; a snippet carries exactly one reason.
  void discard(DiscardReason reason);
  bool operator==(const Snippet&) const = default;
};

struct CutList {
  std::string video_ref;
  std::vector<std::int64_t> cut_frames;  // strictly increasing
  double fps = 0;
  std::vector<std::string> warnings;

  std::vector<double> cut_times() const;
};

}  // namespace privi::curation
