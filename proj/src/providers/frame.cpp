#include "privi/providers/frame.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "privi/common/error.hpp"
#include "privi/common/io.hpp"

namespace privi {

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Frame solid_frame(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Frame f;
  f.width = width;
  f.height = height;
  f.rgb.resize(f.pixel_count() * 3);
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    f.rgb[3 * i] = r;
    f.rgb[3 * i + 1] = g;
    f.rgb[3 * i + 2] = b;
  }
  return f;
}

std::string encode_boxes_tag(const std::vector<DetectionBox>& boxes) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (i) out << ';';
    out << b.x1 << ',' << b.y1 << ',' << b.x2 << ',' << b.y2 << ',' << b.score << ',' << b.label;
  }
  return out.str();
}

std::vector<DetectionBox> parse_boxes_tag(std::string_view text) {
  std::vector<DetectionBox> boxes;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string item(text.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) continue;
    std::istringstream in(item);
    DetectionBox b;
    char comma = 0;
    if (!(in >> b.x1 >> comma >> b.y1 >> comma >> b.x2 >> comma >> b.y2 >> comma >> b.score >> comma))
      throw std::invalid_argument("malformed boxes tag: " + item);
    std::getline(in, b.label);
    boxes.push_back(std::move(b));
  }
  return boxes;
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) {
  require(frame.valid(), "write_ppm: frame buffer does not match its dimensions");
  std::string out = "P6\n";
  for (const auto& [k, v] : frame.tags) {
    require(k.find_first_of("=\n") == std::string::npos && v.find('\n') == std::string::npos,
            "write_ppm: tag contains a reserved character");
    out += "# " + k + "=" + v + "\n";
  }
  out += std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.rgb.data()), frame.rgb.size());
  write_file_atomic(path, out);
}

std::optional<Frame> read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "P6") return std::nullopt;
  Frame f;
  f.ref = path.filename().string();
  int values[3];
  int got = 0;
  while (got < 3 && std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) f.tags[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    std::istringstream ls(line);
    int v;
    while (got < 3 && ls >> v) values[got++] = v;
  }
  if (got < 3 || values[0] <= 0 || values[1] <= 0 || values[2] != 255) return std::nullopt;
  f.width = values[0];
  f.height = values[1];
  f.rgb.resize(f.pixel_count() * 3);
  in.read(reinterpret_cast<char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
  if (static_cast<std::size_t>(in.gcount()) != f.rgb.size()) return std::nullopt;
  return f;
}

}  // namespace privi
