#include <random>
#include <regex>
#include <sstream>

#include "gtest/gtest.h"
#include "test_support.h"
#include "trackscope/error.h"
#include "trackscope/sanitizer.h"

namespace trackscope {
namespace {

const SuffixList& psl() { return default_suffix_list(); }

PageLoadRecord twitter_page() {
  PageLoadRecord page;
  page.protocol = Scheme::kHttps;
  page.hostname = "analytics.twitter.com";
  page.path = "/user/jack/home";
  page.started_at = 1522540800000;  // 2018-04-01T00:00:00Z
  page.user_country = "US";
  return page;
}

TEST(Sanitize, HashesHostnameAndFirstLevelPath) {
  const auto s = sanitize(twitter_page(), {}, psl());
  EXPECT_EQ(s.hostname_digest, "91e6da9d7eb4c0d5");  // md5("analytics.twitter.com")
  EXPECT_EQ(s.path_digest, "00d6b15ae97d06f7");      // md5("/user/")
  EXPECT_EQ(s.month, "2018-04");
  EXPECT_EQ(s.country, "US");
  EXPECT_EQ(s.protocol, Scheme::kHttps);
}

TEST(Sanitize, DigestLengthFollowsConfig) {
  const auto s = sanitize(twitter_page(), {}, psl(), 4);
  EXPECT_EQ(s.hostname_digest, "91e6da9d");
  EXPECT_EQ(s.path_digest.size(), 8u);
}

TEST(Sanitize, MergesCollapsedThirdParties) {
  auto page = twitter_page();
  ThirdPartyStats a, b;
  a.hostname = "a.x.tracker.example";
  a.count_before_request = 2;
  a.content_types = {{"script", 2}};
  b.hostname = "b.x.tracker.example";
  b.count_before_request = 3;
  b.content_types = {{"script", 1}, {"image", 2}};
  page.third_parties = {{a.hostname, a}, {b.hostname, b}};
  const auto s = sanitize(page, {}, psl());
  ASSERT_EQ(s.third_parties.size(), 1u);
  const auto& m = s.third_parties.at("x.tracker.example");
  EXPECT_EQ(m.hostname, "x.tracker.example");
  EXPECT_EQ(m.count_before_request, 5);
  EXPECT_EQ(m.content_types, (std::map<std::string, std::int64_t>{{"image", 2}, {"script", 3}}));
}

TEST(CleaningRule, ReplacesIdentifierLabel) {
  const CleaningRule rule{"userid-cdn.example"};
  EXPECT_EQ(rule.apply("u12345.userid-cdn.example"), "___.userid-cdn.example");
  EXPECT_EQ(rule.apply("userid-cdn.example"), "userid-cdn.example");
  EXPECT_EQ(rule.apply("other.example"), "other.example");
  const std::string once = rule.apply("u1.userid-cdn.example");
  EXPECT_EQ(rule.apply(once), once);
  EXPECT_EQ(clean_third_party_hostname("a.u12345.userid-cdn.example", {rule}, psl()),
            "___.userid-cdn.example");
}

TEST(CleaningRule, ParsesShippedFile) {
  const auto rules = load_cleaning_rules(default_suffix_list_path().parent_path() /
                                         "cleaning_rules.csv");
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0].target_domain, "userid-cdn.example");
  std::istringstream bad("target_domain,action\nx.example,delete\n");
  EXPECT_THROW(parse_cleaning_rules(bad), Error);
}

TEST(Sanitize, SerializedFormRoundTripsWithSchema) {
  auto page = twitter_page();
  ThirdPartyStats tp;
  tp.hostname = "www.google-analytics.com";
  tp.count_before_request = 1;
  page.third_parties[tp.hostname] = tp;
  const auto s = sanitize(page, {}, psl());
  const std::string line = serialize_sanitized(s);
  EXPECT_NE(line.find("\"schema\":\"v1-sanitized\""), std::string::npos);
  EXPECT_EQ(line.find("analytics.twitter.com"), std::string::npos);
  EXPECT_EQ(line.find("/user/"), std::string::npos);
  EXPECT_EQ(parse_sanitized(line), s);
}

// Counter-wise sums over all third parties are unchanged by merging.
TEST(Sanitize, MergeConservesCounters) {
  std::mt19937_64 rng(8);
  const std::vector<std::string> hosts = {
      "a.b.track.example.com", "c.b.track.example.com", "b.track.example.com",
      "x.cdn.example.co.uk", "y.x.cdn.example.co.uk", "stats.g.doubleclick.net",
      "u1.userid-cdn.example", "u2.userid-cdn.example"};
  const std::vector<CleaningRule> rules = {{"userid-cdn.example"}};
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, ThirdPartyStats> tps;
    ThirdPartyStats before;
    for (const auto& h : hosts) {
      if (rng() % 2) continue;
      tps[h] = testing::random_stats(rng, h);
      before += tps[h];
    }
    const auto merged = merge_third_parties(tps, rules, psl());
    ThirdPartyStats after;
    for (const auto& [h, tp] : merged) {
      EXPECT_EQ(h, tp.hostname);
      EXPECT_EQ(clean_third_party_hostname(h, rules, psl()), h);  // idempotent
      after += tp;
    }
    ASSERT_EQ(after, before);
  }
}

TEST(Sanitize, DictionaryReachability) {
  // Public pages are recoverable by hashing a candidate list...
  std::map<std::string, std::string> dictionary;
  for (const char* site : {"www.lemonde.fr", "analytics.twitter.com", "example.com"})
    dictionary[hash_truncated(site)] = site;
  PageLoadRecord page = twitter_page();
  EXPECT_EQ(dictionary.at(sanitize(page, {}, psl()).hostname_digest),
            "analytics.twitter.com");
  // ...while high-entropy private paths collapse to their first level.
  page.path = "/private/3f9a1c0e6b8d4f2a9e7c5b3a1d0f8e6c/x";
  EXPECT_EQ(sanitize(page, {}, psl()).path_digest, hash_truncated("/private/"));
}

PageLoadRecord page_with(std::int64_t t, const std::string& host) {
  PageLoadRecord p;
  p.hostname = "site.example.com";
  p.path = "/";
  p.started_at = t;
  ThirdPartyStats tp;
  tp.hostname = host;
  tp.count_before_request = 1;
  p.third_parties[host] = tp;
  return p;
}

constexpr std::int64_t kDay = 24LL * 3600 * 1000;

TEST(DetectHighCardinality, PersistentUniqueSubdomains) {
  std::vector<PageLoadRecord> corpus;
  for (int i = 0; i < 1000; ++i)
    corpus.push_back(page_with((i < 500 ? 1 : 8) * kDay + i,
                               "u" + std::to_string(i) + ".acct.example"));
  const auto c = detect_high_cardinality(corpus, psl(), 100, 7);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].target_domain, "acct.example");
}

TEST(DetectHighCardinality, StableHostIsNotACandidate) {
  std::vector<PageLoadRecord> corpus;
  for (int i = 0; i < 1000; ++i)
    corpus.push_back(page_with(i * kDay / 50, "www.example.org"));
  EXPECT_TRUE(detect_high_cardinality(corpus, psl(), 100, 7).empty());
}

TEST(DetectHighCardinality, OneWindowOnlyFailsPersistence) {
  std::vector<PageLoadRecord> corpus;
  for (int i = 0; i < 1000; ++i)
    corpus.push_back(page_with(kDay + i, "u" + std::to_string(i) + ".acct.example"));
  for (int i = 0; i < 50; ++i)
    corpus.push_back(page_with(9 * kDay + i, "v" + std::to_string(i) + ".acct.example"));
  EXPECT_TRUE(detect_high_cardinality(corpus, psl(), 100, 7).empty());
}

}  // namespace
}  // namespace trackscope
