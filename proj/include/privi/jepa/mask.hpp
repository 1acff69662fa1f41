#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace privi::jepa {

struct TokenGrid {
  std::size_t t = 8;
  std::size_t h = 14;
  std::size_t w = 14;

  std::size_t size() const { return t * h * w; }
  std::size_t index(std::size_t ti, std::size_t hi, std::size_t wi) const { return (ti * h + hi) * w + wi; }
};

struct BlockShape {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const { return t * h * w; }
};

// Sorted, disjoint index sets covering the grid.
struct MaskSpec {
  std::vector<std::size_t> masked;
  std::vector<std::size_t> context;
};

// Places blocks uniformly at random (fully inside the grid) and unions them
// until at least ceil(ratio * size) tokens are masked. A draw that masks
// every token is rejected and redrawn. Throws ContractError unless
// 0 < ratio < 1 and the block fits.
MaskSpec sample_mask(const TokenGrid& grid, double ratio, const BlockShape& block, std::uint64_t seed,
                     std::uint64_t stream = 0);

// Throws ContractError unless the spec is a proper partition of the grid.
void validate_mask(const MaskSpec& mask, std::size_t grid_size);

}  // namespace privi::jepa
