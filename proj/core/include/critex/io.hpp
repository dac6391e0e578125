#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace critex::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Hex-encoded SHA-256 of the input.
std::string sha256_hex(std::string_view data);

/// GET the body of an http(s) URL. Throws IoError on failure.
std::string http_get(const std::string& url);

}  // namespace critex::io
