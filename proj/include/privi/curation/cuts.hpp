#pragma once

#include <vector>

#include "privi/curation/frame_source.hpp"
#include "privi/curation/types.hpp"

namespace privi::curation {

inline constexpr double kDefaultCutThreshold = 27.0;
inline constexpr int kCutMaxWidth = 256;

// Mean absolute difference of the hue, saturation and value planes between
// two frames, each on a 0-255 scale, averaged over the three planes. Frames
// are box-downscaled to at most kCutMaxWidth pixels wide first.
double content_delta(const Frame& a, const Frame& b);

// Declares a cut at frame t whenever content_delta(previous readable frame,
// t) exceeds `threshold`. Unreadable frames are skipped with a warning and
// never produce a cut themselves.
CutList detect_cuts(const FrameSource& frames, double threshold = kDefaultCutThreshold);

}  // namespace privi::curation
