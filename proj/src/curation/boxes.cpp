#include "privi/curation/boxes.hpp"

#include <algorithm>
#include <numeric>

namespace privi::curation {

double iou(const DetectionBox& a, const DetectionBox& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<DetectionBox> nms(const std::vector<DetectionBox>& boxes, double iou_threshold, double score_threshold) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (boxes[i].score >= score_threshold) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return boxes[a].score > boxes[b].score; });

  std::vector<char> suppressed(order.size(), 0);
  std::vector<DetectionBox> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (suppressed[i]) continue;
    const auto& best = boxes[order[i]];
    kept.push_back(best);
    for (std::size_t j = i + 1; j < order.size(); ++j)
      if (!suppressed[j] && iou(best, boxes[order[j]]) > iou_threshold) suppressed[j] = 1;
  }
  return kept;
}

}  // namespace privi::curation
