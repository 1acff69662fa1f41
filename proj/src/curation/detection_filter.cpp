#include "privi/curation/detection_filter.hpp"

#include "privi/common/error.hpp"
#include "privi/common/parallel.hpp"

namespace privi::curation {
namespace {

enum class Outcome { untouched, done, pending };

}  // namespace

DetectionFilterResult filter_by_detection(std::vector<Snippet> snippets, const DetectorProvider& detector,
                                          const KeyframeLoader& keyframes, const DetectionFilterOptions& options) {
  std::vector<Outcome> outcome(snippets.size(), Outcome::untouched);
  std::vector<std::string> notes(snippets.size());
  parallel_for(snippets.size(), options.workers, [&](std::size_t i) {
    Snippet& s = snippets[i];
    if (!s.kept) return;
    const auto frame = keyframes(s);
    if (!frame) {
      outcome[i] = Outcome::pending;
      notes[i] = "keyframe unavailable for '" + s.snippet_id + "'";
      return;
    }
    try {
      auto raw = detector.detect(*frame, options.prompt);
      validate_boxes(raw, frame->width, frame->height);
      s.boxes = nms(raw, options.iou_threshold, options.score_threshold);
      if (s.boxes.empty()) s.discard(DiscardReason::no_detection);
      outcome[i] = Outcome::done;
    } catch (const ProviderError& e) {
      outcome[i] = Outcome::pending;
      notes[i] = "detector failed for '" + s.snippet_id + "': " + e.what();
    }
  });

  DetectionFilterResult out;
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    if (outcome[i] == Outcome::pending) {
      out.pending.push_back(snippets[i].snippet_id);
      out.warnings.push_back(notes[i]);
    }
  }
  out.snippets = std::move(snippets);
  return out;
}

}  // namespace privi::curation
