#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace instret::util {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace instret::util
