#include "privi/curation/fixtures.hpp"

#include <algorithm>
#include <cstdio>

#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/providers/frame.hpp"

namespace privi::curation {
namespace {

// Hues 60 degrees apart; consecutive segments also alternate bright and dark
// so the value plane alone moves far past the cut threshold.
constexpr std::array<std::array<std::uint8_t, 3>, 6> kHues = {{
    {255, 0, 0}, {255, 255, 0}, {0, 255, 0}, {0, 255, 255}, {0, 0, 255}, {255, 0, 255},
}};

std::array<std::uint8_t, 3> segment_color(std::size_t hue, bool bright) {
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k) {
    const int v = kHues[hue][k] ? (bright ? 220 : 70) : (bright ? 40 : 12);
    c[k] = static_cast<std::uint8_t>(v);
  }
  return c;
}

std::vector<DetectionBox> plant_boxes(Rng& rng, int width, int height, const std::string& label) {
  const double w = std::round(rng.uniform(0.3, 0.6) * width);
  const double h = std::round(rng.uniform(0.3, 0.6) * height);
  const double x1 = std::floor(rng.uniform(0.0, width - w - 1));
  const double y1 = std::floor(rng.uniform(0.0, height - h - 1));
  std::vector<DetectionBox> boxes;
  boxes.push_back({x1, y1, x1 + w, y1 + h, 0.9, label});
  // Near-duplicate that NMS must suppress, plus a sub-threshold box.
  boxes.push_back({x1 + 1, y1, x1 + w + 1, y1 + h, 0.6, label});
  boxes.push_back({0, 0, 4, 4, 0.1, label});
  return boxes;
}

}  // namespace

std::vector<SourceDataset> fixture_sources() {
  return {
      {"camtrap", Setting::wild, {"chimpanzee", "gorilla"}, Diversity::high, 0.5, 2.0},
      {"zoo", Setting::captive, {"chimpanzee"}, Diversity::low, 0.3, 2.0},
      {"sanctuary", Setting::semi_free, {"bonobo"}, Diversity::low, 0.2, 3.0},
  };
}

std::vector<std::int64_t> FixtureClip::planted_cuts() const {
  std::vector<std::int64_t> cuts;
  for (std::size_t s = 1; s < segments.size(); ++s) cuts.push_back(static_cast<std::int64_t>(segments[s].first_frame));
  return cuts;
}

const FixtureSegment& FixtureClip::segment_at_frame(std::size_t index) const {
  for (const auto& s : segments)
    if (index < s.end_frame) return s;
  return segments.back();
}

const FixtureSegment& FixtureClip::segment_at(double time_s) const {
  return segment_at_frame(static_cast<std::size_t>(std::max(0.0, std::floor(time_s * fps))));
}

Frame FixtureClip::render(std::size_t index) const {
  require(index < frame_count, "fixture frame index out of range");
  const auto& seg = segment_at_frame(index);
  Frame f = solid_frame(width, height, seg.color[0], seg.color[1], seg.color[2]);
  Rng rng(noise_seed, index);
  // Luma-only noise: one offset per pixel on all channels keeps the hue exact.
  for (std::size_t p = 0; p < f.rgb.size(); p += 3) {
    const int offset = static_cast<int>(rng.index(5)) - 2;
    for (std::size_t k = p; k < p + 3; ++k)
      f.rgb[k] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(f.rgb[k]) + offset, 0, 255));
  }
  f.ref = video_ref + "#" + std::to_string(index);
  f.tags["label"] = seg.relevant ? "relevant" : "irrelevant";
  if (!seg.boxes.empty()) f.tags["boxes"] = encode_boxes_tag(seg.boxes);
  return f;
}

std::shared_ptr<FrameSource> FixtureClip::source() const {
  auto self = *this;
  return std::make_shared<GeneratedFrameSource>(video_ref, fps, frame_count,
                                                [self](std::size_t i) -> std::optional<Frame> { return self.render(i); });
}

const FixtureClip& FixtureCorpus::clip(const std::string& video_ref) const {
  for (const auto& c : clips)
    if (c.video_ref == video_ref) return c;
  throw ContractError("no fixture clip '" + video_ref + "'");
}

SyntheticEmbedder FixtureCorpus::embedder(double noise_std) const {
  return SyntheticEmbedder(options.seed, options.embedding_dim,
                           two_cluster_centroids(options.seed, options.embedding_dim,
                                                 options.separation_sigma * (noise_std > 0 ? noise_std : 1.0)),
                           noise_std);
}

FixtureCorpus make_fixture_corpus(const FixtureOptions& options) {
  require(options.min_frames >= options.min_segment_frames && options.max_frames >= options.min_frames,
          "fixture frame-count range is inconsistent");
  FixtureCorpus corpus;
  corpus.options = options;
  corpus.sources = fixture_sources();
  Rng rng(options.seed, 0xf1c7);
  for (std::size_t i = 0; i < options.clips; ++i) {
    FixtureClip clip;
    char ref[32];
    std::snprintf(ref, sizeof(ref), "fx%04zu", i);
    clip.video_ref = ref;
    const auto& source = corpus.sources[i % corpus.sources.size()];
    clip.source_id = source.id;
    clip.fps = options.fps;
    clip.width = options.width;
    clip.height = options.height;
    clip.noise_seed = splitmix64(options.seed ^ stable_hash(clip.video_ref));
    clip.frame_count = options.min_frames + rng.index(options.max_frames - options.min_frames + 1);

    // Cut positions on a grid that keeps every segment at least
    // min_segment_frames long.
    std::vector<std::size_t> bounds = {0};
    const std::size_t cuts = rng.index(options.max_cuts + 1);
    for (std::size_t c = 0; c < cuts; ++c) {
      const std::size_t lo = bounds.back() + options.min_segment_frames;
      const std::size_t remaining_after = (cuts - c) * options.min_segment_frames;
      if (lo + remaining_after > clip.frame_count) break;
      const std::size_t hi = clip.frame_count - remaining_after;
      bounds.push_back(lo + rng.index(hi - lo + 1));
    }
    bounds.push_back(clip.frame_count);

    std::size_t hue = rng.index(kHues.size());
    bool bright = rng.bernoulli(0.5);
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
      FixtureSegment seg;
      seg.first_frame = bounds[s];
      seg.end_frame = bounds[s + 1];
      seg.relevant = rng.bernoulli(options.relevant_fraction);
      seg.color = segment_color(hue, bright);
      hue = (hue + 1 + rng.index(kHues.size() - 1)) % kHues.size();
      bright = !bright;
      const bool boxed = seg.relevant || rng.bernoulli(options.irrelevant_box_fraction);
      std::string label = source.species[rng.index(source.species.size())];
      if (rng.bernoulli(options.off_list_label_fraction)) label = "bird";
      if (boxed) seg.boxes = plant_boxes(rng, clip.width, clip.height, label);
      clip.segments.push_back(std::move(seg));
    }
    corpus.clips.push_back(std::move(clip));
  }
  return corpus;
}

void write_fixture_frames(const FixtureClip& clip, const std::filesystem::path& dir) {
  const auto out = dir / clip.video_ref;
  std::filesystem::create_directories(out);
  for (std::size_t i = 0; i < clip.frame_count; ++i)
    write_ppm(out / DirectoryFrameSource::frame_filename(i), clip.render(i));
}

}  // namespace privi::curation
