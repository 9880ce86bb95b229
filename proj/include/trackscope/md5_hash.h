#ifndef TRACKSCOPE_MD5_HASH_H_
#define TRACKSCOPE_MD5_HASH_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace trackscope {

inline constexpr std::size_t kDefaultDigestBytes = 8;

std::array<std::uint8_t, 16> md5(std::string_view data);

// Lowercase hex of the first `bytes` bytes of MD5(value). This is the one
// hashing primitive used across the project (first-party fields, quorum
// value digests, observer ids).
std::string hash_truncated(std::string_view value,
                           std::size_t bytes = kDefaultDigestBytes);

std::string to_hex(const std::uint8_t* data, std::size_t size);

}  // namespace trackscope

#endif  // TRACKSCOPE_MD5_HASH_H_
