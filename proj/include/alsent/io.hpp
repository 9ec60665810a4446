#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace alsent {

// Throws Error("IoError").
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

// UTC, ISO 8601 with a trailing Z.
std::string utc_timestamp();

}  // namespace alsent
