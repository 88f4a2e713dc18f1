#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace trustlab {

inline constexpr std::size_t kDigestBytes = 32;

/// Fixed-width content digest (SHA-256).
struct Digest {
  std::array<std::uint8_t, kDigestBytes> bytes{};

  friend auto operator<=>(const Digest&, const Digest&) = default;

  std::string hex() const;
  /// First 8 hex characters; used in text renderings.
  std::string short_hex() const;
  bool is_zero() const;
};

Digest digest_of(std::span<const std::uint8_t> content);
Digest digest_of(std::string_view content);

}  // namespace trustlab

template <>
struct std::hash<trustlab::Digest> {
  std::size_t operator()(const trustlab::Digest& d) const noexcept {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) h = (h << 8) | d.bytes[i];
    return h;
  }
};
