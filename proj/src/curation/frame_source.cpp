#include "privi/curation/frame_source.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "privi/common/error.hpp"
#include "privi/providers/frame.hpp"

namespace privi::curation {

std::size_t FrameSource::index_at(double time_s) const {
  require(frame_count() > 0, "frame source '" + video_ref() + "' is empty");
  const double idx = std::floor(time_s * fps() + 1e-9);
  return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(frame_count() - 1)));
}

MemoryFrameSource::MemoryFrameSource(std::string video_ref, double fps, std::vector<std::optional<Frame>> frames)
    : ref_(std::move(video_ref)), fps_(fps), frames_(std::move(frames)) {
  require(fps_ > 0, "fps must be positive");
}

std::optional<Frame> MemoryFrameSource::frame(std::size_t index) const {
  if (index >= frames_.size()) return std::nullopt;
  return frames_[index];
}

GeneratedFrameSource::GeneratedFrameSource(std::string video_ref, double fps, std::size_t count, Generator gen)
    : ref_(std::move(video_ref)), fps_(fps), count_(count), gen_(std::move(gen)) {
  require(fps_ > 0, "fps must be positive");
}

std::optional<Frame> GeneratedFrameSource::frame(std::size_t index) const {
  if (index >= count_) return std::nullopt;
  return gen_(index);
}

DirectoryFrameSource::DirectoryFrameSource(std::string video_ref, std::filesystem::path dir, double fps)
    : ref_(std::move(video_ref)), fps_(fps) {
  require(fps_ > 0, "fps must be positive");
  require(std::filesystem::is_directory(dir), "frame directory '" + dir.string() + "' does not exist");
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".ppm") files_.push_back(e.path());
  std::sort(files_.begin(), files_.end());
}

std::string DirectoryFrameSource::frame_filename(std::size_t index) { return fmt::format("{:06d}.ppm", index); }

std::optional<Frame> DirectoryFrameSource::frame(std::size_t index) const {
  if (index >= files_.size()) return std::nullopt;
  auto f = read_ppm(files_[index]);
  if (f) f->ref = ref_ + "#" + std::to_string(index);
  return f;
}

DecoderFrameSource::DecoderFrameSource(std::string video_ref, std::string command, double fps,
                                       std::size_t frame_count)
    : ref_(std::move(video_ref)), command_(std::move(command)), fps_(fps), count_(frame_count) {
  require(fps_ > 0, "fps must be positive");
  require(!command_.empty(), "decoder command must be non-empty");
}

DecoderFrameSource::~DecoderFrameSource() { stop(); }

void DecoderFrameSource::start() const {
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw std::runtime_error("decoder: pipe() failed");
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("decoder: fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void DecoderFrameSource::stop() const {
  if (pid_ < 0) return;
  ::close(to_child_);
  ::close(from_child_);
  int status = 0;
  if (::waitpid(pid_, &status, WNOHANG) == 0) {
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, &status, 0);
  }
  pid_ = to_child_ = from_child_ = -1;
}

namespace {

bool write_all(int fd, const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    const ssize_t n = ::write(fd, s.data() + off, s.size() - off);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t off = 0;
  while (off < n) {
    const ssize_t r = ::read(fd, buf + off, n - off);
    if (r <= 0) return false;
    off += static_cast<std::size_t>(r);
  }
  return true;
}

std::optional<std::string> read_line(int fd) {
  std::string line;
  char c;
  while (true) {
    const ssize_t r = ::read(fd, &c, 1);
    if (r <= 0) return std::nullopt;
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > 256) return std::nullopt;
  }
}

}  // namespace

std::optional<Frame> DecoderFrameSource::frame(std::size_t index) const {
  if (index >= count_) return std::nullopt;
  std::lock_guard lock(mu_);
  if (pid_ < 0) start();
  ::signal(SIGPIPE, SIG_IGN);
  const double t = static_cast<double>(index) / fps_;
  if (!write_all(to_child_, fmt::format("{} {:.6f}\n", ref_, t))) {
    stop();
    return std::nullopt;
  }
  const auto header = read_line(from_child_);
  int w = 0, h = 0;
  if (!header || std::sscanf(header->c_str(), "%d %d", &w, &h) != 2) {
    stop();
    return std::nullopt;
  }
  if (w <= 0 || h <= 0) return std::nullopt;
  Frame f;
  f.width = w;
  f.height = h;
  f.ref = ref_ + "#" + std::to_string(index);
  f.rgb.resize(f.pixel_count() * 3);
  if (!read_exact(from_child_, f.rgb.data(), f.rgb.size())) {
    stop();
    return std::nullopt;
  }
  return f;
}

}  // namespace privi::curation
