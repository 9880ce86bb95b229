#include "trackscope/suffix_list.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "trackscope/error.h"

namespace trackscope {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view last_label(std::string_view host) {
  const auto dot = host.rfind('.');
  return dot == std::string_view::npos ? host : host.substr(dot + 1);
}

// Start offsets of every label, left to right.
std::vector<std::size_t> label_offsets(std::string_view host) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t i = 0; i < host.size(); ++i)
    if (host[i] == '.') offsets.push_back(i + 1);
  return offsets;
}

std::string normalize_hostname(std::string_view hostname) {
  std::string host = to_lower(trim(hostname));
  if (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty())
    throw Error(ErrorCode::kInvalidHostname, "empty hostname");
  if (host.front() == '.' || host.find("..") != std::string::npos)
    throw Error(ErrorCode::kInvalidHostname,
                "empty label in '" + std::string(hostname) + "'");
  for (unsigned char c : host) {
    if (c == '/' || c == '?' || c == '#' || c == '@' || std::isspace(c))
      throw Error(ErrorCode::kInvalidHostname,
                  "invalid character in '" + std::string(hostname) + "'");
  }
  return host;
}

}  // namespace

SuffixList SuffixList::parse(std::istream& in) {
  SuffixList list;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (view.starts_with("//")) {
      constexpr std::string_view kVersion = "// VERSION:";
      if (view.starts_with(kVersion) && list.source_version_.empty())
        list.source_version_ = std::string(trim(view.substr(kVersion.size())));
      continue;
    }
    // Rules end at the first whitespace.
    view = view.substr(0, view.find_first_of(" \t"));
    if (view.empty()) continue;

    std::string rule = to_lower(view);
    if (rule.front() == '!') {
      rule.erase(0, 1);
      list.exceptions_.insert(rule);
    } else if (rule.starts_with("*.")) {
      rule.erase(0, 2);
      list.wildcards_.insert(rule);
    } else {
      list.rules_.insert(rule);
    }
    list.tlds_.insert(std::string(last_label(rule)));
  }
  return list;
}

SuffixList SuffixList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::kConfigError,
                "cannot open suffix list " + path.string());
  return parse(in);
}

SuffixList SuffixList::from_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

std::size_t SuffixList::public_suffix_depth(std::string_view hostname) const {
  const auto offsets = label_offsets(hostname);
  const std::size_t labels = offsets.size();

  // An exception rule beats every other match; its suffix drops the
  // leftmost label of the rule.
  for (std::size_t i = 0; i < labels; ++i) {
    if (exceptions_.contains(std::string(hostname.substr(offsets[i]))))
      return labels - i - 1;
  }
  for (std::size_t i = 0; i < labels; ++i) {
    const std::string candidate(hostname.substr(offsets[i]));
    if (rules_.contains(candidate)) return labels - i;
    if (i + 1 < labels &&
        wildcards_.contains(std::string(hostname.substr(offsets[i + 1]))))
      return labels - i;
  }
  return 1;
}

bool SuffixList::has_known_tld(std::string_view hostname) const {
  return tlds_.contains(std::string(last_label(hostname)));
}

std::filesystem::path default_suffix_list_path() {
  if (const char* dir = std::getenv("TRACKSCOPE_DATA_DIR"))
    return std::filesystem::path(dir) / "public_suffix_list_icann.dat";
  return std::filesystem::path(TRACKSCOPE_DATA_DIR) /
         "public_suffix_list_icann.dat";
}

const SuffixList& default_suffix_list() {
  static const SuffixList list = SuffixList::load(default_suffix_list_path());
  return list;
}

bool is_ip_literal(std::string_view hostname) {
  if (hostname.find(':') != std::string_view::npos) return true;
  if (!hostname.empty() && hostname.front() == '[') return true;
  int dots = 0;
  for (unsigned char c : hostname) {
    if (c == '.')
      ++dots;
    else if (!std::isdigit(c))
      return false;
  }
  return dots == 3;
}

RegistrableDomain registrable_domain(std::string_view hostname,
                                     const SuffixList& suffixes) {
  std::string host = normalize_hostname(hostname);
  if (is_ip_literal(host)) return {host, 0};

  const auto offsets = label_offsets(host);
  const std::size_t depth = suffixes.public_suffix_depth(host);
  if (depth >= offsets.size())
    throw Error(ErrorCode::kSuffixOnly,
                "'" + host + "' is a public suffix");
  return {host.substr(offsets[offsets.size() - depth - 1]), depth};
}

std::string truncate_tld2(std::string_view hostname,
                          const SuffixList& suffixes) {
  std::string host = normalize_hostname(hostname);
  if (is_ip_literal(host)) return host;
  const auto offsets = label_offsets(host);
  const std::size_t keep = registrable_domain(host, suffixes).suffix_depth + 2;
  if (offsets.size() <= keep) return host;
  return host.substr(offsets[offsets.size() - keep]);
}

bool is_third_party(std::string_view page_hostname,
                    std::string_view request_hostname,
                    const SuffixList& suffixes) {
  return registrable_domain(page_hostname, suffixes).value !=
         registrable_domain(request_hostname, suffixes).value;
}

}  // namespace trackscope
