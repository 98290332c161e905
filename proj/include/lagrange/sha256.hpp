#pragma once

#include <string>
#include <string_view>

namespace lagrange {

// Hex-encoded SHA-256 digest of `data`. Backed by OpenSSL's EVP interface.
std::string sha256_hex(std::string_view data);

}  // namespace lagrange
