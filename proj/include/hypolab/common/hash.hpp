#pragma once

#include <string>
#include <string_view>

namespace hypolab {

/// Lower-case hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// Standard base64 (with padding) of the given bytes.
std::string base64_encode(std::string_view bytes);

}  // namespace hypolab
