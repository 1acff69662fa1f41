#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "privi/providers/types.hpp"

namespace privi::curation {

// Random access to the decoded frames of one video.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::string video_ref() const = 0;
  virtual std::size_t frame_count() const = 0;
  virtual double fps() const = 0;
  // nullopt when the frame cannot be read.
  virtual std::optional<Frame> frame(std::size_t index) const = 0;

  double duration_s() const { return static_cast<double>(frame_count()) / fps(); }
  std::size_t index_at(double time_s) const;
  std::optional<Frame> frame_at(double time_s) const { return frame(index_at(time_s)); }
};

class MemoryFrameSource final : public FrameSource {
 public:
  // Null entries model unreadable frames.
  MemoryFrameSource(std::string video_ref, double fps, std::vector<std::optional<Frame>> frames);

  std::string video_ref() const override { return ref_; }
  std::size_t frame_count() const override { return frames_.size(); }
  double fps() const override { return fps_; }
  std::optional<Frame> frame(std::size_t index) const override;

 private:
  std::string ref_;
  double fps_;
  std::vector<std::optional<Frame>> frames_;
};

// Frames produced on demand by a generator function.
class GeneratedFrameSource final : public FrameSource {
 public:
  using Generator = std::function<std::optional<Frame>(std::size_t)>;
  GeneratedFrameSource(std::string video_ref, double fps, std::size_t count, Generator gen);

  std::string video_ref() const override { return ref_; }
  std::size_t frame_count() const override { return count_; }
  double fps() const override { return fps_; }
  std::optional<Frame> frame(std::size_t index) const override;

 private:
  std::string ref_;
  double fps_;
  std::size_t count_;
  Generator gen_;
};

// Directory of numbered binary PPM frames ("000000.ppm", "000001.ppm", ...).
class DirectoryFrameSource final : public FrameSource {
 public:
  DirectoryFrameSource(std::string video_ref, std::filesystem::path dir, double fps);

  std::string video_ref() const override { return ref_; }
  std::size_t frame_count() const override { return files_.size(); }
  double fps() const override { return fps_; }
  std::optional<Frame> frame(std::size_t index) const override;

  static std::string frame_filename(std::size_t index);

 private:
  std::string ref_;
  double fps_;
  std::vector<std::filesystem::path> files_;
};

// Long-lived decoder subprocess. For each request it reads one line
// "<video_ref> <timestamp_s>\n" on stdin and answers "<width> <height>\n"
// followed by width*height*3 bytes of packed RGB on stdout. A "0 0" header
// means the frame is unavailable.
class DecoderFrameSource final : public FrameSource {
 public:
  DecoderFrameSource(std::string video_ref, std::string command, double fps, std::size_t frame_count);
  ~DecoderFrameSource() override;

  std::string video_ref() const override { return ref_; }
  std::size_t frame_count() const override { return count_; }
  double fps() const override { return fps_; }
  std::optional<Frame> frame(std::size_t index) const override;

 private:
  void start() const;
  void stop() const;

  std::string ref_;
  std::string command_;
  double fps_;
  std::size_t count_;
  mutable std::mutex mu_;
  mutable int pid_ = -1;
  mutable int to_child_ = -1;
  mutable int from_child_ = -1;
};

}  // namespace privi::curation
