#include "privi/common/error.hpp"
#include "privi/providers/providers.hpp"

namespace privi {

std::size_t tokenize_layout(std::size_t frames, std::size_t height, std::size_t width, std::size_t tubelet,
                            std::size_t patch) {
  require(tubelet > 0 && patch > 0, "tokenize_layout: tubelet and patch must be positive");
  require(frames > 0 && frames % tubelet == 0,
          "tokenize_layout: " + std::to_string(frames) + " frames not divisible by tubelet " + std::to_string(tubelet));
  require(height > 0 && height % patch == 0,
          "tokenize_layout: height " + std::to_string(height) + " not divisible by patch " + std::to_string(patch));
  require(width > 0 && width % patch == 0,
          "tokenize_layout: width " + std::to_string(width) + " not divisible by patch " + std::to_string(patch));
  return (frames / tubelet) * (height / patch) * (width / patch);
}

void validate_boxes(const std::vector<DetectionBox>& boxes, int frame_width, int frame_height) {
  for (const auto& b : boxes) {
    const bool ok = b.x1 >= 0 && b.y1 >= 0 && b.x2 <= frame_width && b.y2 <= frame_height && b.x1 < b.x2 &&
                    b.y1 < b.y2 && b.score >= 0.0 && b.score <= 1.0;
    if (!ok)
      throw SchemaError("detection box [" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
                        std::to_string(b.x2) + "," + std::to_string(b.y2) + "] score " + std::to_string(b.score) +
                        " invalid for " + std::to_string(frame_width) + "x" + std::to_string(frame_height) +
                        " frame");
  }
}

}  // namespace privi
