#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace privi {

// Encodes packed 8-bit RGB as PNG bytes.
std::vector<std::uint8_t> encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb);

}  // namespace privi
