#include "privi/curation/chunk.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "privi/common/error.hpp"

namespace privi::curation {
namespace {
constexpr double kTimeEps = 1e-9;
}

std::string snippet_id_for(const std::string& video_ref, double start_s) {
  return fmt::format("{}@{:09d}", video_ref, static_cast<long long>(std::llround(start_s * 1000.0)));
}

std::vector<Snippet> chunk_timeline(const std::string& video_ref, const std::string& source_id, double duration_s,
                                    const CutList& cuts, double length_s, double stride_s) {
  require(length_s > 0, "chunk_timeline: length_s must be positive");
  require(stride_s > 0 && stride_s <= length_s, "chunk_timeline: stride_s must be in (0, length_s]");
  std::vector<Snippet> out;
  if (duration_s + kTimeEps < length_s) return out;

  std::vector<double> bounds{0.0};
  if (cuts.fps > 0)
    for (double t : cuts.cut_times())
      if (t > kTimeEps && t < duration_s - kTimeEps && t > bounds.back() + kTimeEps) bounds.push_back(t);
  bounds.push_back(duration_s);

  for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
    const double seg_start = bounds[seg], seg_end = bounds[seg + 1];
    for (std::size_t k = 0;; ++k) {
      const double start = seg_start + static_cast<double>(k) * stride_s;
      const double end = start + length_s;
      if (end > seg_end + kTimeEps) break;
      Snippet s;
      s.snippet_id = snippet_id_for(video_ref, start);
      s.source_id = source_id;
      s.video_ref = video_ref;
      s.start_s = start;
      s.end_s = end;
      s.keyframe_time_s = 0.5 * (start + end);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::size_t mark_cut_overlaps(std::vector<Snippet>& snippets, const CutList& cuts) {
  const auto times = cuts.cut_times();
  std::size_t n = 0;
  for (auto& s : snippets) {
    if (!s.kept || s.video_ref != cuts.video_ref) continue;
    const bool crosses = std::any_of(times.begin(), times.end(), [&](double t) {
      return t > s.start_s + kTimeEps && t < s.end_s - kTimeEps;
    });
    if (crosses) {
      s.discard(DiscardReason::cut_overlap);
      ++n;
    }
  }
  return n;
}

}  // namespace privi::curation
