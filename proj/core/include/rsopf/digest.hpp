#pragma once

#include <string>
#include <string_view>

namespace rsopf {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents; throws IoError.
std::string sha256_file(const std::string& path);

}  // namespace rsopf
