#ifndef TRACKSCOPE_URL_H_
#define TRACKSCOPE_URL_H_

#include <string>
#include <string_view>

namespace trackscope {

enum class Scheme { kHttp, kHttps, kOther };

std::string_view scheme_name(Scheme scheme);

// An absolute URL split into the parts the pipeline needs. Nothing is
// percent-decoded: downstream hashing works on the raw forms.
struct ParsedUrl {
  Scheme scheme = Scheme::kOther;
  std::string scheme_text;  // lowercase, as it appeared
  std::string hostname;     // lowercase, no port or userinfo
  std::string path = "/";   // always starts with '/', excludes ";params"
  std::string query;        // after '?', without the '?'
  std::string parameter_string;  // after the first ';' in the path

  // Normalized form: scheme://hostname path [;params] [?query].
  std::string serialize() const;

  bool operator==(const ParsedUrl&) const = default;
};

// Throws Error(kMalformedUrl) when the scheme or hostname is missing.
ParsedUrl parse_url(std::string_view raw);

// "/user/jack/home" -> "/user/", "/" -> "/", "/index.html" -> "/index.html/".
std::string first_level_path(std::string_view path);

}  // namespace trackscope

#endif  // TRACKSCOPE_URL_H_
