#include "privi/providers/synthetic.hpp"

#include <cmath>

#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/providers/frame.hpp"

namespace privi {

SyntheticEmbedder::SyntheticEmbedder(std::uint64_t seed, std::size_t dim,
                                     std::map<std::string, std::vector<float>> class_centroids, double noise_std)
    : seed_(seed), dim_(dim), centroids_(std::move(class_centroids)), noise_std_(noise_std) {
  require(!centroids_.empty(), "synthetic embedder needs at least one centroid");
  for (const auto& [label, c] : centroids_)
    require(c.size() == dim_, "centroid '" + label + "' has length " + std::to_string(c.size()) +
                                  ", expected " + std::to_string(dim_));
}

std::vector<float> SyntheticEmbedder::embed(const Frame& keyframe) const {
  const auto tag = keyframe.tags.find("label");
  require(tag != keyframe.tags.end(), "synthetic embedder: frame '" + keyframe.ref + "' has no label tag");
  const auto it = centroids_.find(tag->second);
  require(it != centroids_.end(), "synthetic embedder: unknown label '" + tag->second + "'");
  std::vector<float> out = it->second;
  if (noise_std_ > 0) {
    Rng rng(seed_, stable_hash(keyframe.ref));
    for (auto& v : out) v += static_cast<float>(rng.normal(0.0, noise_std_));
  }
  return out;
}

std::map<std::string, std::vector<float>> two_cluster_centroids(std::uint64_t seed, std::size_t dim,
                                                                double separation) {
  Rng rng(seed, 0xce11);
  std::vector<double> dir(dim);
  double norm = 0.0;
  for (auto& d : dir) {
    d = rng.normal();
    norm += d * d;
  }
  norm = std::sqrt(norm);
  std::vector<float> pos(dim), neg(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    pos[i] = static_cast<float>(0.5 * separation * dir[i] / norm);
    neg[i] = -pos[i];
  }
  return {{"relevant", pos}, {"irrelevant", neg}};
}

std::vector<DetectionBox> TagDetector::detect(const Frame& keyframe, std::string_view) const {
  const auto it = keyframe.tags.find("boxes");
  if (it == keyframe.tags.end()) return {};
  return parse_boxes_tag(it->second);
}

SyntheticFeatureProvider::SyntheticFeatureProvider(std::uint64_t seed, TokenLayout layout, std::size_t dim,
                                                   std::map<std::string, std::vector<float>> class_means,
                                                   double noise_std)
    : seed_(seed), layout_(layout), dim_(dim), means_(std::move(class_means)), noise_std_(noise_std) {
  tokenize_layout(layout_);
  for (const auto& [label, m] : means_)
    require(m.size() == dim_, "class mean '" + label + "' does not match feature dim");
}

TokenFeatures SyntheticFeatureProvider::features(const Miniclip& clip) const {
  const auto tag = clip.tags.find("label");
  require(tag != clip.tags.end(), "synthetic features: miniclip '" + clip.ref + "' has no label tag");
  const auto it = means_.find(tag->second);
  require(it != means_.end(), "synthetic features: unknown label '" + tag->second + "'");
  TokenFeatures tf;
  tf.n = tokenize_layout(layout_);
  tf.d = dim_;
  tf.provider_id = id();
  tf.miniclip_ref = clip.ref;
  tf.crop = clip.crop;
  const std::string key = clip.ref + "|" + std::to_string(clip.crop.x1) + "," + std::to_string(clip.crop.y1) +
                          "," + std::to_string(clip.crop.x2) + "," + std::to_string(clip.crop.y2);
  Rng rng(seed_, stable_hash(key));
  tf.tokens.resize(tf.n * tf.d);
  for (std::size_t i = 0; i < tf.n; ++i)
    for (std::size_t j = 0; j < tf.d; ++j)
      tf.tokens[i * tf.d + j] = it->second[j] + static_cast<float>(rng.normal(0.0, noise_std_));
  return tf;
}

}  // namespace privi
