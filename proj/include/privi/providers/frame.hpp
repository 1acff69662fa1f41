#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privi/providers/types.hpp"

namespace privi {

// FNV-1a; stable across platforms and runs, used to derive per-item seeds.
std::uint64_t stable_hash(std::string_view text);

Frame solid_frame(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

// "x1,y1,x2,y2,score,label;...": the frame tag the synthetic detector reads.
std::string encode_boxes_tag(const std::vector<DetectionBox>& boxes);
std::vector<DetectionBox> parse_boxes_tag(std::string_view text);

// Binary PPM (P6). Tags are stored as "# key=value" header comments.
void write_ppm(const std::filesystem::path& path, const Frame& frame);
// nullopt when the file is missing or malformed.
std::optional<Frame> read_ppm(const std::filesystem::path& path);

}  // namespace privi
