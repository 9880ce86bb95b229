#ifndef TRACKSCOPE_SANITIZER_H_
#define TRACKSCOPE_SANITIZER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trackscope/md5_hash.h"
#include "trackscope/probe.h"
#include "trackscope/suffix_list.h"

namespace trackscope {

inline constexpr std::string_view kSanitizedSchema = "v1-sanitized";

// Client-side rewrite that strips identifier-bearing labels in front of
// `target_domain` ("u12345.userid-cdn.example" -> "___.userid-cdn.example").
struct CleaningRule {
  enum class Action { kReplaceSubdomain };

  std::string target_domain;
  Action action = Action::kReplaceSubdomain;

  std::string apply(std::string_view hostname) const;

  bool operator==(const CleaningRule&) const = default;
};

inline constexpr std::string_view kSubdomainPlaceholder = "___";

// CSV "target_domain,action"; the only action is "replace".
std::vector<CleaningRule> parse_cleaning_rules(std::istream& in);
std::vector<CleaningRule> load_cleaning_rules(const std::filesystem::path& p);

// What leaves the client: no raw first-party hostname or path.
struct SanitizedPageLoad {
  Scheme protocol = Scheme::kHttp;
  std::string hostname_digest;
  std::string path_digest;
  std::string month;    // "YYYY-MM" of the page start
  std::string country;  // client country, may be empty
  std::map<std::string, ThirdPartyStats> third_parties;

  bool operator==(const SanitizedPageLoad&) const = default;
};

// TLD+2 truncation followed by the first matching cleaning rule.
std::string clean_third_party_hostname(std::string_view hostname,
                                       const std::vector<CleaningRule>& rules,
                                       const SuffixList& suffixes);

// Third parties that collapse onto the same cleaned hostname are merged by
// counter-wise addition.
std::map<std::string, ThirdPartyStats> merge_third_parties(
    const std::map<std::string, ThirdPartyStats>& third_parties,
    const std::vector<CleaningRule>& rules, const SuffixList& suffixes);

SanitizedPageLoad sanitize(const PageLoadRecord& page,
                           const std::vector<CleaningRule>& rules,
                           const SuffixList& suffixes,
                           std::size_t hash_bytes = kDefaultDigestBytes);

std::string serialize_sanitized(const SanitizedPageLoad& page);
SanitizedPageLoad parse_sanitized(std::string_view line);

// Watches TLD+1 domains for an unusually large, persistent set of TLD+2
// subdomains. Candidates are for manual review; nothing is auto-applied.
class SubdomainCardinalityMonitor {
 public:
  SubdomainCardinalityMonitor(const SuffixList& suffixes,
                              std::size_t threshold = 100,
                              int window_days = 7);

  void add(const PageLoadRecord& page);
  void add_hostname(std::string_view hostname, std::int64_t timestamp_ms);

  // One rule per domain that reached the threshold in at least two windows.
  std::vector<CleaningRule> candidates() const;

  std::size_t distinct_subdomains(std::string_view domain,
                                  std::int64_t window) const;

 private:
  const SuffixList& suffixes_;
  std::size_t threshold_;
  std::int64_t window_ms_;
  // domain -> window index -> distinct TLD+2 hostnames
  std::map<std::string, std::map<std::int64_t, std::set<std::string>>> seen_;
};

std::vector<CleaningRule> detect_high_cardinality(
    const std::vector<PageLoadRecord>& corpus, const SuffixList& suffixes,
    std::size_t threshold = 100, int window_days = 7);

}  // namespace trackscope

#endif  // TRACKSCOPE_SANITIZER_H_
