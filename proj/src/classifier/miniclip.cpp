#include "privi/classifier/miniclip.hpp"

#include <algorithm>
#include <cmath>

#include "privi/common/error.hpp"

namespace privi::clf {

std::vector<std::size_t> uniform_frame_indices(std::size_t window_start, std::size_t window_length,
                                               std::size_t count) {
  require(window_length >= 1 && count >= 1, "uniform_frame_indices: empty window or count");
  std::vector<std::size_t> out(count);
  const double len = static_cast<double>(window_length), n = static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = window_start + static_cast<std::size_t>(std::floor(static_cast<double>(k) * len / n + len / (2.0 * n)));
  return out;
}

MiniclipSpec sample_miniclip(std::size_t track_length, std::size_t frame_j, const CropRect& box, int frame_width,
                             int frame_height, double padding, std::size_t clip_len, std::size_t count) {
  require(track_length >= 1, "sample_miniclip: track has no frames");
  require(frame_j < track_length, "sample_miniclip: frame " + std::to_string(frame_j) + " outside track of " +
                                      std::to_string(track_length));
  require(clip_len >= 1 && count >= 1, "sample_miniclip: clip length and frame count must be positive");
  require(padding >= 0, "sample_miniclip: padding must be non-negative");
  require(box.x1 < box.x2 && box.y1 < box.y2, "sample_miniclip: degenerate box");
  MiniclipSpec spec;
  spec.window_length = std::min(clip_len, track_length);
  const std::size_t half = clip_len / 2;
  const std::size_t latest = track_length - spec.window_length;
  spec.window_start = std::min(frame_j > half ? frame_j - half : 0, latest);
  spec.frames = uniform_frame_indices(spec.window_start, spec.window_length, count);
  const double px = padding * box.width(), py = padding * box.height();
  spec.crop = {std::max(0.0, box.x1 - px), std::max(0.0, box.y1 - py),
               std::min<double>(frame_width, box.x2 + px), std::min<double>(frame_height, box.y2 + py)};
  return spec;
}

std::vector<MiniclipSpec> protocol_views(const MiniclipSpec& base, std::size_t track_length) {
  require(track_length >= 1, "protocol_views: empty track");
  const double w = base.crop.width() * kViewScale, h = base.crop.height() * kViewScale;
  const double cx = 0.5 * (base.crop.x1 + base.crop.x2), cy = 0.5 * (base.crop.y1 + base.crop.y2);
  const CropRect crops[3] = {
      {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2},
      {base.crop.x1, base.crop.y1, base.crop.x1 + w, base.crop.y1 + h},
      {base.crop.x2 - w, base.crop.y2 - h, base.crop.x2, base.crop.y2},
  };
  const std::ptrdiff_t offsets[3] = {0, -kViewJitter, kViewJitter};
  std::vector<MiniclipSpec> views;
  for (int v = 0; v < 3; ++v) {
    MiniclipSpec s = base;
    s.crop = crops[v];
    for (auto& f : s.frames) {
      const auto shifted = static_cast<std::ptrdiff_t>(f) + offsets[v];
      f = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(shifted, 0, static_cast<std::ptrdiff_t>(track_length) - 1));
    }
    views.push_back(std::move(s));
  }
  return views;
}

Miniclip extract_miniclip(const MiniclipSpec& spec, const std::string& ref,
                          const std::function<std::optional<Frame>(std::size_t)>& frame_at) {
  Miniclip clip;
  clip.ref = ref;
  clip.crop = spec.crop;
  for (auto i : spec.frames) {
    auto frame = frame_at(i);
    require(frame.has_value(), "miniclip '" + ref + "': frame " + std::to_string(i) + " unreadable");
    clip.frames.push_back(std::move(*frame));
  }
  return clip;
}

}  // namespace privi::clf
