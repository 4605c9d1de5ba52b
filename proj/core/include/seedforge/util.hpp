#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

namespace seedforge {

std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string iso8601_utc(std::chrono::system_clock::time_point when);

/// Fixed-precision decimal formatting, locale-independent.
std::string format_fixed(double value, int decimals);

}  // namespace seedforge
