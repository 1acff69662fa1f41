#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "privi/providers/types.hpp"

// Interfaces to the external pretrained models. Implementations must be
// deterministic for identical inputs and safe to call from several threads.
namespace privi {

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<float> embed(const Frame& keyframe) const = 0;
};

class DetectorProvider {
 public:
  virtual ~DetectorProvider() = default;
  virtual std::string id() const = 0;
  virtual std::vector<DetectionBox> detect(const Frame& keyframe, std::string_view prompt) const = 0;
};

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual std::string id() const = 0;
  virtual TokenLayout layout() const = 0;
  virtual std::size_t dim() const = 0;
  virtual TokenFeatures features(const Miniclip& clip) const = 0;
};

// N = (frames / tubelet) * (height / patch) * (width / patch).
// Throws ContractError when a dimension is not divisible.
std::size_t tokenize_layout(std::size_t frames, std::size_t height, std::size_t width, std::size_t tubelet,
                            std::size_t patch);
inline std::size_t tokenize_layout(const TokenLayout& l) {
  return tokenize_layout(l.frames, l.height, l.width, l.tubelet_depth, l.patch);
}

// Throws SchemaError if any box lies outside the frame, is inverted, or has
// a score outside [0, 1].
void validate_boxes(const std::vector<DetectionBox>& boxes, int frame_width, int frame_height);

}  // namespace privi
