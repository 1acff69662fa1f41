#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace privi {

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename, then fsyncs, so readers never see a
// partial artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
// Appends one line and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

}  // namespace privi
