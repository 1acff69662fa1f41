#include "privi/curation/cuts.hpp"

#include <algorithm>
#include <cmath>

#include "privi/common/error.hpp"

namespace privi::curation {
namespace {

struct HsvPlanes {
  int width = 0, height = 0;
  std::vector<float> h, s, v;
};

HsvPlanes to_hsv_downscaled(const Frame& f) {
  const int factor = std::max(1, (f.width + kCutMaxWidth - 1) / kCutMaxWidth);
  HsvPlanes out;
  out.width = f.width / factor;
  out.height = std::max(1, f.height / factor);
  out.width = std::max(1, out.width);
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  out.h.assign(n, 0.f);
  out.s.assign(n, 0.f);
  out.v.assign(n, 0.f);
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      double r = 0, g = 0, b = 0;
      int count = 0;
      for (int dy = 0; dy < factor; ++dy) {
        const int y = oy * factor + dy;
        if (y >= f.height) break;
        for (int dx = 0; dx < factor; ++dx) {
          const int x = ox * factor + dx;
          if (x >= f.width) break;
          const std::size_t p = (static_cast<std::size_t>(y) * f.width + x) * 3;
          r += f.rgb[p];
          g += f.rgb[p + 1];
          b += f.rgb[p + 2];
          ++count;
        }
      }
      r /= count;
      g /= count;
      b /= count;
      const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
      const double delta = mx - mn;
      double hue = 0.0;
      if (delta > 0) {
        if (mx == r) hue = std::fmod((g - b) / delta, 6.0);
        else if (mx == g) hue = (b - r) / delta + 2.0;
        else hue = (r - g) / delta + 4.0;
        hue *= 60.0;
        if (hue < 0) hue += 360.0;
      }
      const std::size_t i = static_cast<std::size_t>(oy) * out.width + ox;
      out.h[i] = static_cast<float>(hue * 255.0 / 360.0);
      out.s[i] = static_cast<float>(mx > 0 ? 255.0 * delta / mx : 0.0);
      out.v[i] = static_cast<float>(mx);
    }
  }
  return out;
}

double plane_delta(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
  return acc / static_cast<double>(a.size());
}

double delta(const HsvPlanes& a, const HsvPlanes& b) {
  require(a.width == b.width && a.height == b.height, "content_delta: frames differ in size");
  return (plane_delta(a.h, b.h) + plane_delta(a.s, b.s) + plane_delta(a.v, b.v)) / 3.0;
}

}  // namespace

double content_delta(const Frame& a, const Frame& b) {
  require(a.valid() && b.valid(), "content_delta: invalid frame");
  return delta(to_hsv_downscaled(a), to_hsv_downscaled(b));
}

CutList detect_cuts(const FrameSource& frames, double threshold) {
  require(frames.frame_count() >= 2, "detect_cuts: need at least 2 frames, '" + frames.video_ref() + "' has " +
                                         std::to_string(frames.frame_count()));
  CutList out;
  out.video_ref = frames.video_ref();
  out.fps = frames.fps();
  std::optional<HsvPlanes> prev;
  for (std::size_t t = 0; t < frames.frame_count(); ++t) {
    const auto f = frames.frame(t);
    if (!f || !f->valid()) {
      out.warnings.push_back("frame " + std::to_string(t) + " of '" + out.video_ref + "' unreadable; skipped");
      continue;
    }
    auto planes = to_hsv_downscaled(*f);
    if (prev && (prev->width != planes.width || prev->height != planes.height)) {
      out.warnings.push_back("frame " + std::to_string(t) + " changes resolution; treated as reference only");
    } else if (prev && t > 0 && delta(*prev, planes) > threshold) {
      out.cut_frames.push_back(static_cast<std::int64_t>(t));
    }
    prev = std::move(planes);
  }
  return out;
}

}  // namespace privi::curation
