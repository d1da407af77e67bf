#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace forgetset {

std::string read_text_file(const std::filesystem::path& path);
// Writes `content` to `path`, replacing it; throws DataError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace forgetset
