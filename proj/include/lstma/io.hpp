#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lstma {

/// Writes to a sibling temporary file, then renames over `path`, so a failed
/// write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace lstma
