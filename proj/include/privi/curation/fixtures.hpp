#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "privi/curation/frame_source.hpp"
#include "privi/curation/types.hpp"
#include "privi/providers/synthetic.hpp"

// Synthetic video corpus with known ground truth: hard cuts at planted frame
// indices, a relevant/irrelevant label per cut-free segment, and planted
// detection boxes. Everything is a pure function of the options.
namespace privi::curation {

struct FixtureOptions {
  std::size_t clips = 200;
  std::uint64_t seed = 7;
  double fps = 4.0;
  int width = 32;
  int height = 24;
  std::size_t min_frames = 32;
  std::size_t max_frames = 80;
  std::size_t max_cuts = 2;
  std::size_t min_segment_frames = 8;
  double relevant_fraction = 0.55;
  // Share of irrelevant segments that still carry a detectable box.
  double irrelevant_box_fraction = 0.5;
  // Share of boxes labelled with a species not listed by the source.
  double off_list_label_fraction = 0.1;
  std::size_t embedding_dim = 512;
  double separation_sigma = 8.0;
};

struct FixtureSegment {
  std::size_t first_frame = 0;
  std::size_t end_frame = 0;  // exclusive
  bool relevant = false;
  std::array<std::uint8_t, 3> color{};
  std::vector<DetectionBox> boxes;  // as planted, before NMS
};

struct FixtureClip {
  std::string video_ref;
  std::string source_id;
  double fps = 4.0;
  std::size_t frame_count = 0;
  int width = 0;
  int height = 0;
  std::uint64_t noise_seed = 0;
  std::vector<FixtureSegment> segments;

  std::vector<std::int64_t> planted_cuts() const;
  const FixtureSegment& segment_at_frame(std::size_t index) const;
  const FixtureSegment& segment_at(double time_s) const;
  Frame render(std::size_t index) const;
  std::shared_ptr<FrameSource> source() const;
};

struct FixtureCorpus {
  FixtureOptions options;
  std::vector<SourceDataset> sources;
  std::vector<FixtureClip> clips;

  const FixtureClip& clip(const std::string& video_ref) const;
  SyntheticEmbedder embedder(double noise_std = 1.0) const;
};

// Three sources: a multi-species wild camera-trap set, a single-species
// captive set and a single-species semi-free set.
std::vector<SourceDataset> fixture_sources();

FixtureCorpus make_fixture_corpus(const FixtureOptions& options = {});

// Writes every frame as <dir>/<video_ref>/NNNNNN.ppm.
void write_fixture_frames(const FixtureClip& clip, const std::filesystem::path& dir);

}  // namespace privi::curation
