#pragma once

#include <vector>

#include "privi/providers/types.hpp"

namespace privi::curation {

inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr double kDefaultDetectionScore = 0.35;

double iou(const DetectionBox& a, const DetectionBox& b);

// Greedy NMS. Boxes scoring below score_threshold are dropped; then the
// highest-scoring remaining box (earlier index on ties) is kept and every box
// with IoU > iou_threshold against it is removed, until none remain. Output
// is in selection order.
std::vector<DetectionBox> nms(const std::vector<DetectionBox>& boxes, double iou_threshold = kDefaultNmsIou,
                              double score_threshold = kDefaultDetectionScore);

}  // namespace privi::curation
