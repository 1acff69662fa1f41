#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace privi {

// Axis-aligned box in pixel coordinates of its frame.
struct DetectionBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double score = 0;
  std::string label;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool operator==(const DetectionBox&) const = default;
};

struct CropRect {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  bool operator==(const CropRect&) const = default;
};

// Packed 8-bit RGB image. `tags` carries side-channel metadata used by the
// synthetic providers (e.g. the planted class label); real frames leave it
// empty.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  std::string ref;
  std::map<std::string, std::string> tags;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool valid() const { return width > 0 && height > 0 && rgb.size() == pixel_count() * 3; }
};

struct TokenLayout {
  std::size_t frames = 16;
  std::size_t height = 224;
  std::size_t width = 224;
  std::size_t tubelet_depth = 2;
  std::size_t patch = 16;
};

// N x D patch tokens of one miniclip, row-major.
struct TokenFeatures {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> tokens;
  std::string provider_id;
  std::string miniclip_ref;
  CropRect crop;
};

// Frames of one miniclip view plus the crop to apply before encoding.
struct Miniclip {
  std::string ref;
  std::vector<Frame> frames;
  CropRect crop;
  std::map<std::string, std::string> tags;
};

}  // namespace privi
