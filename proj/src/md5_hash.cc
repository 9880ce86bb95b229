#include "trackscope/md5_hash.h"

#include <openssl/evp.h>

#include <algorithm>
#include <stdexcept>

namespace trackscope {

std::array<std::uint8_t, 16> md5(std::string_view data) {
  std::array<std::uint8_t, 16> digest{};
  unsigned int size = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &size, EVP_md5(),
                 nullptr) != 1 ||
      size != digest.size())
    throw std::runtime_error("MD5 digest failed");
  return digest;
}

std::string to_hex(const std::uint8_t* data, std::size_t size) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

std::string hash_truncated(std::string_view value, std::size_t bytes) {
  const auto digest = md5(value);
  return to_hex(digest.data(), std::min(bytes, digest.size()));
}

}  // namespace trackscope
