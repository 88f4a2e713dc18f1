#include "trustlab/digest.hpp"

#include <openssl/sha.h>

#include <algorithm>

namespace trustlab {

namespace {
constexpr char kHex[] = "0123456789abcdef";
}

std::string Digest::hex() const {
  std::string out;
  out.reserve(2 * bytes.size());
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string Digest::short_hex() const { return hex().substr(0, 8); }

bool Digest::is_zero() const {
  return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
}

Digest digest_of(std::span<const std::uint8_t> content) {
  Digest d;
  SHA256(content.data(), content.size(), d.bytes.data());
  return d;
}

Digest digest_of(std::string_view content) {
  return digest_of(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

}  // namespace trustlab
