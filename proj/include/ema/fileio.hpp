#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ema {

// Throws IoError on failure.
std::string read_file(const std::filesystem::path& path);

// Writes to `<path>.tmp` and renames over `path`, so a failed write never
// leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ema
