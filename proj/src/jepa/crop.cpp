#include "privi/jepa/crop.hpp"

#include <algorithm>

#include "privi/common/error.hpp"

namespace privi::jepa {

CropRect crop_around_box(int frame_width, int frame_height, const DetectionBox& box, double max_scale, Rng& rng) {
  require(box.x2 > box.x1 && box.y2 > box.y1, "crop_around_box: degenerate box");
  require(box.x1 >= 0 && box.y1 >= 0 && box.x2 <= frame_width && box.y2 <= frame_height,
          "crop_around_box: box outside the frame");
  require(max_scale >= 1.0, "crop_around_box: max_scale must be at least 1");
  const double jitter = max_scale > 1.0 ? rng.uniform(1.0, max_scale) : 1.0;
  const double side = std::max(box.width(), box.height()) * jitter;
  const auto place = [side](double lo, double hi, double extent, double& a, double& b) {
    if (side >= extent) {
      a = 0.0;
      b = extent;
      return;
    }
    a = std::clamp(0.5 * (lo + hi) - 0.5 * side, 0.0, extent - side);
    b = a + side;
  };
  CropRect c;
  place(box.x1, box.x2, frame_width, c.x1, c.x2);
  place(box.y1, box.y2, frame_height, c.y1, c.y2);
  return c;
}

}  // namespace privi::jepa
