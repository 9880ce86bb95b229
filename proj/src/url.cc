#include "trackscope/url.h"

#include <algorithm>
#include <cctype>

#include "trackscope/error.h"

namespace trackscope {
namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front())))
    return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '+' || c == '-' || c == '.';
  });
}

bool valid_host_char(unsigned char c) {
  return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == ':' ||
         c == '[' || c == ']' || c >= 0x80;
}

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kHttp: return "http";
    case Scheme::kHttps: return "https";
    case Scheme::kOther: return "other";
  }
  return "other";
}

std::string ParsedUrl::serialize() const {
  std::string out = scheme_text + "://" + hostname + path;
  if (!parameter_string.empty()) out += ";" + parameter_string;
  if (!query.empty()) out += "?" + query;
  return out;
}

ParsedUrl parse_url(std::string_view raw) {
  const auto sep = raw.find("://");
  if (sep == std::string_view::npos || !valid_scheme(raw.substr(0, sep)))
    throw Error(ErrorCode::kMalformedUrl,
                "missing scheme in '" + std::string(raw) + "'");

  ParsedUrl url;
  url.scheme_text = to_lower(raw.substr(0, sep));
  if (url.scheme_text == "http")
    url.scheme = Scheme::kHttp;
  else if (url.scheme_text == "https")
    url.scheme = Scheme::kHttps;

  std::string_view rest = raw.substr(sep + 3);
  // Fragments never leave the browser.
  if (auto hash = rest.find('#'); hash != std::string_view::npos)
    rest = rest.substr(0, hash);

  const auto authority_end = rest.find_first_of("/?;");
  std::string_view authority = rest.substr(0, authority_end);
  std::string_view tail = authority_end == std::string_view::npos
                              ? std::string_view{}
                              : rest.substr(authority_end);

  if (auto at = authority.rfind('@'); at != std::string_view::npos)
    authority = authority.substr(at + 1);
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos)
      throw Error(ErrorCode::kMalformedUrl,
                  "unterminated IPv6 literal in '" + std::string(raw) + "'");
    authority = authority.substr(0, close + 1);
  } else if (auto colon = authority.rfind(':');
             colon != std::string_view::npos) {
    authority = authority.substr(0, colon);
  }
  while (!authority.empty() && authority.back() == '.')
    authority.remove_suffix(1);

  if (authority.empty())
    throw Error(ErrorCode::kMalformedUrl,
                "missing hostname in '" + std::string(raw) + "'");
  for (unsigned char c : authority) {
    if (!valid_host_char(c))
      throw Error(ErrorCode::kMalformedUrl,
                  "invalid hostname character in '" + std::string(raw) + "'");
  }
  url.hostname = to_lower(authority);

  std::string_view path_part = tail;
  if (auto q = tail.find('?'); q != std::string_view::npos) {
    url.query = std::string(tail.substr(q + 1));
    path_part = tail.substr(0, q);
  }
  if (auto semi = path_part.find(';'); semi != std::string_view::npos) {
    url.parameter_string = std::string(path_part.substr(semi + 1));
    path_part = path_part.substr(0, semi);
  }
  url.path = path_part.empty() ? "/" : std::string(path_part);
  if (url.path.front() != '/') url.path.insert(url.path.begin(), '/');
  return url;
}

std::string first_level_path(std::string_view path) {
  std::string_view trimmed = path;
  while (!trimmed.empty() && trimmed.front() == '/') trimmed.remove_prefix(1);
  if (trimmed.empty()) return "/";
  const auto slash = trimmed.find('/');
  return "/" + std::string(trimmed.substr(0, slash)) + "/";
}

}  // namespace trackscope
