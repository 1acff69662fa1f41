#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "privi/curation/boxes.hpp"
#include "privi/curation/types.hpp"
#include "privi/providers/providers.hpp"

namespace privi::curation {

struct DetectionFilterOptions {
  double score_threshold = kDefaultDetectionScore;
  double iou_threshold = kDefaultNmsIou;
  std::string prompt = "primate";
  std::size_t workers = 1;
};

struct DetectionFilterResult {
  std::vector<Snippet> snippets;
  // Kept snippets whose detection failed; rerun the stage to resolve them.
  std::vector<std::string> pending;
  std::vector<std::string> warnings;
};

using KeyframeLoader = std::function<std::optional<Frame>(const Snippet&)>;

// Runs the detector on each kept snippet's keyframe, applies NMS, stores the
// surviving boxes, and discards (no_detection) snippets left with none.
// Provider failures leave the snippet kept and listed as pending. Work is
// spread over `workers` threads; output order equals input order.
DetectionFilterResult filter_by_detection(std::vector<Snippet> snippets, const DetectorProvider& detector,
                                          const KeyframeLoader& keyframes, const DetectionFilterOptions& options);

}  // namespace privi::curation
