#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "privi/providers/providers.hpp"

namespace privi {

// Embedding = centroid of the frame's "label" tag + N(0, noise_std) noise
// seeded by (seed, frame ref). Frames without a known label are an error.
class SyntheticEmbedder final : public EmbeddingProvider {
 public:
  SyntheticEmbedder(std::uint64_t seed, std::size_t dim, std::map<std::string, std::vector<float>> class_centroids,
                    double noise_std = 1.0);

  std::string id() const override { return "synthetic-embedder"; }
  std::size_t dim() const override { return dim_; }
  std::vector<float> embed(const Frame& keyframe) const override;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::map<std::string, std::vector<float>> centroids_;
  double noise_std_;
};

// Two-class centroids: "relevant" at +separation/2 and "irrelevant" at
// -separation/2 along a seeded random unit direction.
std::map<std::string, std::vector<float>> two_cluster_centroids(std::uint64_t seed, std::size_t dim,
                                                                double separation);

class EmptyDetector final : public DetectorProvider {
 public:
  std::string id() const override { return "empty-detector"; }
  std::vector<DetectionBox> detect(const Frame&, std::string_view) const override { return {}; }
};

// Returns the same boxes for every frame.
class FixedBoxDetector final : public DetectorProvider {
 public:
  explicit FixedBoxDetector(std::vector<DetectionBox> boxes) : boxes_(std::move(boxes)) {}
  std::string id() const override { return "fixed-detector"; }
  std::vector<DetectionBox> detect(const Frame&, std::string_view) const override { return boxes_; }

 private:
  std::vector<DetectionBox> boxes_;
};

// Returns the boxes planted in the frame's "boxes" tag (see encode_boxes_tag).
class TagDetector final : public DetectorProvider {
 public:
  std::string id() const override { return "tag-detector"; }
  std::vector<DetectionBox> detect(const Frame& keyframe, std::string_view prompt) const override;
};

// Tokens = class mean of the clip's "label" tag + seeded noise that depends on
// the clip ref and crop, so distinct views give distinct but related tokens.
class SyntheticFeatureProvider final : public FeatureProvider {
 public:
  SyntheticFeatureProvider(std::uint64_t seed, TokenLayout layout, std::size_t dim,
                           std::map<std::string, std::vector<float>> class_means, double noise_std = 1.0);

  std::string id() const override { return "synthetic-features"; }
  TokenLayout layout() const override { return layout_; }
  std::size_t dim() const override { return dim_; }
  TokenFeatures features(const Miniclip& clip) const override;

 private:
  std::uint64_t seed_;
  TokenLayout layout_;
  std::size_t dim_;
  std::map<std::string, std::vector<float>> means_;
  double noise_std_;
};

}  // namespace privi
