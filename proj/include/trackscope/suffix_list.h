#ifndef TRACKSCOPE_SUFFIX_LIST_H_
#define TRACKSCOPE_SUFFIX_LIST_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>

namespace trackscope {

struct RegistrableDomain {
  std::string value;
  std::size_t suffix_depth = 0;  // labels belonging to the public suffix

  bool operator==(const RegistrableDomain&) const = default;
};

// Public-suffix rules in the publicsuffix.org file grammar. Read-only after
// construction, so one instance can be shared between threads.
class SuffixList {
 public:
  SuffixList() = default;

  static SuffixList parse(std::istream& in);
  static SuffixList load(const std::filesystem::path& path);
  static SuffixList from_string(std::string_view text);

  const std::string& source_version() const { return source_version_; }
  std::size_t rule_count() const {
    return rules_.size() + wildcards_.size() + exceptions_.size();
  }

  // Number of trailing labels of `hostname` that form its public suffix.
  // Unlisted TLDs fall back to the implicit "*" rule (one label).
  std::size_t public_suffix_depth(std::string_view hostname) const;

  // True when the TLD of `hostname` appears in at least one rule.
  bool has_known_tld(std::string_view hostname) const;

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // parent of "*.<parent>"
  std::unordered_set<std::string> exceptions_;  // "!<rule>" without the '!'
  std::unordered_set<std::string> tlds_;
  std::string source_version_;
};

// The shipped ICANN-section snapshot; the private section is excluded so the
// tracker database decides how shared hosting domains are split.
const SuffixList& default_suffix_list();
std::filesystem::path default_suffix_list_path();

bool is_ip_literal(std::string_view hostname);

// TLD+1. IP literals are their own registrable domain.
// Throws kInvalidHostname or kSuffixOnly.
RegistrableDomain registrable_domain(std::string_view hostname,
                                     const SuffixList& suffixes);

// TLD+2: at most one label beyond the registrable domain.
std::string truncate_tld2(std::string_view hostname,
                          const SuffixList& suffixes);

bool is_third_party(std::string_view page_hostname,
                    std::string_view request_hostname,
                    const SuffixList& suffixes);

}  // namespace trackscope

#endif  // TRACKSCOPE_SUFFIX_LIST_H_
