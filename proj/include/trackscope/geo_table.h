#ifndef TRACKSCOPE_GEO_TABLE_H_
#define TRACKSCOPE_GEO_TABLE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace trackscope {

inline constexpr std::string_view kUnknownCountry = "--";

// An IPv4 address is stored as its v4-mapped IPv6 form so both families
// share one prefix table.
struct IpAddress {
  std::array<std::uint8_t, 16> bytes{};
  bool is_v4 = false;

  std::string to_string() const;
};

// Throws Error(kMalformedIp).
IpAddress parse_ip(std::string_view text);

struct GeoPrefix {
  IpAddress network;
  int length = 0;  // in bits of the 128-bit form
  std::string country;
  std::string text;
};

// Static prefix -> ISO country table, CSV "prefix,iso2".
class GeoTable {
 public:
  static GeoTable parse(std::istream& in);
  static GeoTable load(const std::filesystem::path& path);

  void add(std::string_view prefix, std::string_view country);

  // Longest-prefix match; "--" when nothing matches.
  std::string resolve(std::string_view ip) const;

  const std::vector<GeoPrefix>& prefixes() const { return prefixes_; }

 private:
  std::vector<GeoPrefix> prefixes_;
};

std::string resolve_country(std::string_view ip, const GeoTable& table);

}  // namespace trackscope

#endif  // TRACKSCOPE_GEO_TABLE_H_
