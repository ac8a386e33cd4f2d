#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ainr {

// Writes to "<path>.tmp" and renames over `path`, so readers never observe a
// partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Whole file as bytes. Throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace ainr
