#pragma once

#include "privi/common/rng.hpp"
#include "privi/providers/types.hpp"

namespace privi::jepa {

inline constexpr int kCropOutputSize = 224;

// Square crop around a detection box for continual pretraining. The side is
// max(box width, box height) times a jitter drawn from [1, max_scale]; the
// square is centred on the box and shifted to lie inside the frame. Along an
// axis where the side exceeds the frame the crop spans the whole frame.
// Crops are later resized to kCropOutputSize square. Throws ContractError for
// a zero-area box or a box outside the frame.
CropRect crop_around_box(int frame_width, int frame_height, const DetectionBox& box, double max_scale, Rng& rng);

}  // namespace privi::jepa
