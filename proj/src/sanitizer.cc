#include "trackscope/sanitizer.h"

#include <fstream>

#include "trackscope/error.h"
#include "trackscope/month.h"
#include "trackscope/url.h"

namespace trackscope {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::int64_t kMsPerDay = 24LL * 60 * 60 * 1000;

}  // namespace

std::string CleaningRule::apply(std::string_view hostname) const {
  const std::string suffix = "." + target_domain;
  if (hostname.size() <= suffix.size() || !hostname.ends_with(suffix))
    return std::string(hostname);
  return std::string(kSubdomainPlaceholder) + suffix;
}

std::vector<CleaningRule> parse_cleaning_rules(std::istream& in) {
  std::vector<CleaningRule> rules;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::kParseError,
                  "cleaning rules line " + std::to_string(number) +
                      ": expected 'target_domain,action'");
    std::string target = line.substr(0, comma);
    const std::string action = line.substr(comma + 1);
    if (number == 1 && target == "target_domain") continue;
    if (action != "replace")
      throw Error(ErrorCode::kParseError,
                  "cleaning rules line " + std::to_string(number) +
                      ": unknown action '" + action + "'");
    rules.push_back({std::move(target), CleaningRule::Action::kReplaceSubdomain});
  }
  return rules;
}

std::vector<CleaningRule> load_cleaning_rules(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in)
    throw Error(ErrorCode::kConfigError,
                "cannot open cleaning rules " + p.string());
  return parse_cleaning_rules(in);
}

std::string clean_third_party_hostname(std::string_view hostname,
                                       const std::vector<CleaningRule>& rules,
                                       const SuffixList& suffixes) {
  std::string host = truncate_tld2(hostname, suffixes);
  for (const auto& rule : rules) {
    std::string cleaned = rule.apply(host);
    if (cleaned != host) return cleaned;
  }
  return host;
}

std::map<std::string, ThirdPartyStats> merge_third_parties(
    const std::map<std::string, ThirdPartyStats>& third_parties,
    const std::vector<CleaningRule>& rules, const SuffixList& suffixes) {
  std::map<std::string, ThirdPartyStats> merged;
  for (const auto& [host, stats] : third_parties) {
    const std::string cleaned =
        clean_third_party_hostname(host, rules, suffixes);
    ThirdPartyStats& slot = merged[cleaned];
    slot.hostname = cleaned;
    slot += stats;
  }
  return merged;
}

SanitizedPageLoad sanitize(const PageLoadRecord& page,
                           const std::vector<CleaningRule>& rules,
                           const SuffixList& suffixes,
                           std::size_t hash_bytes) {
  SanitizedPageLoad out;
  out.protocol = page.protocol;
  out.hostname_digest = hash_truncated(page.hostname, hash_bytes);
  out.path_digest = hash_truncated(first_level_path(page.path), hash_bytes);
  out.month = MonthKey::from_timestamp(page.started_at).to_string();
  out.country = page.user_country;
  out.third_parties = merge_third_parties(page.third_parties, rules, suffixes);
  return out;
}

std::string serialize_sanitized(const SanitizedPageLoad& page) {
  ordered_json j;
  j["schema"] = kSanitizedSchema;
  j["protocol"] = scheme_name(page.protocol);
  j["hostname_digest"] = page.hostname_digest;
  j["path_digest"] = page.path_digest;
  j["month"] = page.month;
  j["country"] = page.country;
  j["third_parties"] = ordered_json::array();
  for (const auto& [host, tp] : page.third_parties)
    j["third_parties"].push_back(to_json(tp));
  return j.dump();
}

SanitizedPageLoad parse_sanitized(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                std::string("sanitized record: ") + e.what());
  }
  try {
    if (j.value("schema", "") != kSanitizedSchema)
      throw Error(ErrorCode::kParseError,
                  "sanitized record: unsupported schema");
    SanitizedPageLoad page;
    page.protocol =
        j.at("protocol") == "https" ? Scheme::kHttps : Scheme::kHttp;
    page.hostname_digest = j.at("hostname_digest").get<std::string>();
    page.path_digest = j.at("path_digest").get<std::string>();
    page.month = j.at("month").get<std::string>();
    page.country = j.value("country", "");
    for (const auto& tp : j.at("third_parties")) {
      auto stats = third_party_from_json(tp);
      page.third_parties[stats.hostname] = std::move(stats);
    }
    return page;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("sanitized record: ") + e.what());
  }
}

SubdomainCardinalityMonitor::SubdomainCardinalityMonitor(
    const SuffixList& suffixes, std::size_t threshold, int window_days)
    : suffixes_(suffixes),
      threshold_(threshold),
      window_ms_(kMsPerDay * std::max(1, window_days)) {}

void SubdomainCardinalityMonitor::add(const PageLoadRecord& page) {
  for (const auto& [host, stats] : page.third_parties)
    add_hostname(host, page.started_at);
}

void SubdomainCardinalityMonitor::add_hostname(std::string_view hostname,
                                               std::int64_t timestamp_ms) {
  if (is_ip_literal(hostname)) return;
  std::string domain = registrable_domain(hostname, suffixes_).value;
  std::string tld2 = truncate_tld2(hostname, suffixes_);
  if (tld2 == domain) return;
  seen_[std::move(domain)][timestamp_ms / window_ms_].insert(std::move(tld2));
}

std::size_t SubdomainCardinalityMonitor::distinct_subdomains(
    std::string_view domain, std::int64_t window) const {
  const auto it = seen_.find(std::string(domain));
  if (it == seen_.end()) return 0;
  const auto w = it->second.find(window);
  return w == it->second.end() ? 0 : w->second.size();
}

std::vector<CleaningRule> SubdomainCardinalityMonitor::candidates() const {
  std::vector<CleaningRule> out;
  for (const auto& [domain, windows] : seen_) {
    int persistent = 0;
    for (const auto& [index, hosts] : windows)
      if (hosts.size() >= threshold_) ++persistent;
    if (persistent >= 2)
      out.push_back({domain, CleaningRule::Action::kReplaceSubdomain});
  }
  return out;
}

std::vector<CleaningRule> detect_high_cardinality(
    const std::vector<PageLoadRecord>& corpus, const SuffixList& suffixes,
    std::size_t threshold, int window_days) {
  SubdomainCardinalityMonitor monitor(suffixes, threshold, window_days);
  for (const auto& page : corpus) monitor.add(page);
  return monitor.candidates();
}

}  // namespace trackscope
