#include "privi/jepa/mask.hpp"

#include <cmath>
#include <string>

#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"

namespace privi::jepa {

MaskSpec sample_mask(const TokenGrid& grid, double ratio, const BlockShape& block, std::uint64_t seed,
                     std::uint64_t stream) {
  require(ratio > 0.0 && ratio < 1.0, "mask ratio must be in (0, 1), got " + std::to_string(ratio));
  require(block.size() > 0 && block.t <= grid.t && block.h <= grid.h && block.w <= grid.w,
          "mask block does not fit the token grid");
  const std::size_t n = grid.size();
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  require(target < n, "mask ratio leaves no context tokens");
  Rng rng(seed, stream);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<char> hit(n, 0);
    std::size_t count = 0;
    while (count < target) {
      const std::size_t t0 = rng.index(grid.t - block.t + 1);
      const std::size_t h0 = rng.index(grid.h - block.h + 1);
      const std::size_t w0 = rng.index(grid.w - block.w + 1);
      for (std::size_t t = t0; t < t0 + block.t; ++t)
        for (std::size_t h = h0; h < h0 + block.h; ++h)
          for (std::size_t w = w0; w < w0 + block.w; ++w) {
            auto& cell = hit[grid.index(t, h, w)];
            if (!cell) {
              cell = 1;
              ++count;
            }
          }
    }
    if (count == n) continue;
    MaskSpec m;
    for (std::size_t i = 0; i < n; ++i) (hit[i] ? m.masked : m.context).push_back(i);
    return m;
  }
  throw ContractError("sample_mask: every draw masked the whole grid; lower the ratio or block size");
}

void validate_mask(const MaskSpec& mask, std::size_t grid_size) {
  require(!mask.masked.empty(), "mask is empty");
  require(!mask.context.empty(), "mask covers every token");
  require(mask.masked.size() + mask.context.size() == grid_size, "mask does not cover the grid");
  std::vector<char> seen(grid_size, 0);
  for (const auto* set : {&mask.masked, &mask.context})
    for (auto i : *set) {
      require(i < grid_size && !seen[i], "mask index out of range or repeated");
      seen[i] = 1;
    }
}

}  // namespace privi::jepa
