#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace instret::util {

/// Whole file as bytes; ValidationError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Non-empty lines with trailing whitespace removed.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_lines(std::string_view content);

}  // namespace instret::util
