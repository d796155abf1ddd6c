#pragma once

#include <string>
#include <string_view>

namespace eyeheat::io {

/// Shortest round-trip decimal form of x (locale independent).
std::string format_double(double x);

/// Quote a CSV field if it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

/// Whole file as a string; throws eyeheat::Error on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace eyeheat::io
