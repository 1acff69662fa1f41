#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "privi/providers/types.hpp"

namespace privi::clf {

inline constexpr std::size_t kClipLength = 64;
inline constexpr std::size_t kClipFrames = 16;

struct MiniclipSpec {
  std::size_t window_start = 0;
  std::size_t window_length = 0;
  std::vector<std::size_t> frames;  // absolute frame indices, non-decreasing
  CropRect crop;
};

// start + floor(k * length / count + length / (2 * count)) for k < count.
std::vector<std::size_t> uniform_frame_indices(std::size_t window_start, std::size_t window_length,
                                               std::size_t count);

// Window of clip_len frames centred on frame_j (start = j - clip_len / 2,
// clamped to the track), count uniformly spaced frames, and a crop that
// grows the box by `padding` times its width (height) on each side, clamped
// to the frame. Throws ContractError for an empty track or j outside it.
MiniclipSpec sample_miniclip(std::size_t track_length, std::size_t frame_j, const CropRect& box, int frame_width,
                             int frame_height, double padding, std::size_t clip_len = kClipLength,
                             std::size_t count = kClipFrames);

inline constexpr double kViewScale = 0.875;
inline constexpr std::ptrdiff_t kViewJitter = 2;

// Three evaluation views of one miniclip: a centred crop, a top-left and a
// bottom-right crop, each at kViewScale of the base crop, with frame offsets
// 0, -kViewJitter and +kViewJitter (clamped to the track).
std::vector<MiniclipSpec> protocol_views(const MiniclipSpec& base, std::size_t track_length);

// Gathers the spec's frames. Unreadable frames are an error.
Miniclip extract_miniclip(const MiniclipSpec& spec, const std::string& ref,
                          const std::function<std::optional<Frame>(std::size_t)>& frame_at);

}  // namespace privi::clf
