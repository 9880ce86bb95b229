#include "trackscope/geo_table.h"

#include <arpa/inet.h>

#include <charconv>
#include <fstream>

#include "trackscope/error.h"

namespace trackscope {

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN] = {};
  if (is_v4)
    inet_ntop(AF_INET, bytes.data() + 12, buf, sizeof(buf));
  else
    inet_ntop(AF_INET6, bytes.data(), buf, sizeof(buf));
  return buf;
}

IpAddress parse_ip(std::string_view text) {
  std::string s(text);
  if (s.size() > 2 && s.front() == '[' && s.back() == ']')
    s = s.substr(1, s.size() - 2);
  IpAddress ip;
  if (inet_pton(AF_INET, s.c_str(), ip.bytes.data() + 12) == 1) {
    ip.bytes[10] = 0xff;
    ip.bytes[11] = 0xff;
    ip.is_v4 = true;
    return ip;
  }
  if (inet_pton(AF_INET6, s.c_str(), ip.bytes.data()) == 1) return ip;
  throw Error(ErrorCode::kMalformedIp, "'" + std::string(text) + "'");
}

namespace {

bool prefix_matches(const IpAddress& addr, const GeoPrefix& prefix) {
  int remaining = prefix.length;
  for (std::size_t i = 0; i < 16 && remaining > 0; ++i, remaining -= 8) {
    const std::uint8_t mask =
        remaining >= 8 ? 0xff : static_cast<std::uint8_t>(0xff << (8 - remaining));
    if ((addr.bytes[i] & mask) != (prefix.network.bytes[i] & mask))
      return false;
  }
  return true;
}

}  // namespace

void GeoTable::add(std::string_view prefix, std::string_view country) {
  const auto slash = prefix.find('/');
  if (slash == std::string_view::npos)
    throw Error(ErrorCode::kMalformedIp,
                "prefix '" + std::string(prefix) + "' has no length");
  GeoPrefix entry;
  entry.network = parse_ip(prefix.substr(0, slash));
  int bits = 0;
  const auto len = prefix.substr(slash + 1);
  const auto [ptr, ec] = std::from_chars(len.data(), len.data() + len.size(), bits);
  const int max_bits = entry.network.is_v4 ? 32 : 128;
  if (ec != std::errc() || ptr != len.data() + len.size() || bits < 0 ||
      bits > max_bits)
    throw Error(ErrorCode::kMalformedIp,
                "bad prefix length in '" + std::string(prefix) + "'");
  entry.length = entry.network.is_v4 ? bits + 96 : bits;
  entry.country = std::string(country);
  entry.text = std::string(prefix);
  prefixes_.push_back(std::move(entry));
}

GeoTable GeoTable::parse(std::istream& in) {
  GeoTable table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::kParseError,
                  "geo table line " + std::to_string(number) +
                      ": expected 'prefix,iso2'");
    const std::string prefix = line.substr(0, comma);
    if (number == 1 && prefix == "prefix") continue;
    table.add(prefix, line.substr(comma + 1));
  }
  return table;
}

GeoTable GeoTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::kConfigError,
                "cannot open geo table " + path.string());
  return parse(in);
}

std::string GeoTable::resolve(std::string_view ip) const {
  const IpAddress addr = parse_ip(ip);
  const GeoPrefix* best = nullptr;
  for (const auto& prefix : prefixes_) {
    if (prefix.network.is_v4 != addr.is_v4) continue;
    if (prefix_matches(addr, prefix) &&
        (best == nullptr || prefix.length > best->length))
      best = &prefix;
  }
  return best ? best->country : std::string(kUnknownCountry);
}

std::string resolve_country(std::string_view ip, const GeoTable& table) {
  return table.resolve(ip);
}

}  // namespace trackscope
