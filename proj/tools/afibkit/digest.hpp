#pragma once

#include <filesystem>
#include <string>

namespace afibkit::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace afibkit::cli
