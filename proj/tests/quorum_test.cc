#include <map>
#include <random>
#include <set>
#include <sstream>

#include "gtest/gtest.h"
#include "trackscope/error.h"
#include "trackscope/md5_hash.h"
#include "trackscope/quorum.h"

namespace trackscope {
namespace {

std::vector<UrlToken> tokens(const char* url, QuorumConfig config = {}) {
  return extract_tokens(parse_url(url), config);
}

TEST(ExtractTokens, Examples) {
  EXPECT_EQ(tokens("https://t.example/p?uid=a8f3k29&lang=en"),
            (std::vector<UrlToken>{{"uid", "a8f3k29"}, {"lang", "en"}}));
  EXPECT_TRUE(tokens("https://t.example/p").empty());
  EXPECT_TRUE(tokens("https://t.example/p?").empty());
  EXPECT_EQ(tokens("https://t.example/x;jsessionid=XYZ123"),
            (std::vector<UrlToken>{{"jsessionid", "XYZ123"}}));
}

TEST(ExtractTokens, BareTokensAndShortValues) {
  EXPECT_EQ(tokens("https://t.example/?abcdef&x=&y=1"),
            (std::vector<UrlToken>{{"_", "abcdef"}, {"y", "1"}}));
  QuorumConfig c;
  c.min_value_length = 3;
  EXPECT_EQ(tokens("https://t.example/?a=12&b=123", c),
            (std::vector<UrlToken>{{"b", "123"}}));
}

TEST(QuorumConfig, Validation) {
  QuorumConfig c;
  c.k = 1;
  EXPECT_THROW(c.validate(), Error);
  c.k = 2;
  c.min_value_length = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(QuorumStore, SetSemantics) {
  QuorumStore s;
  s.observe("uid", "v", "alice");
  s.observe("uid", "v", "alice");
  EXPECT_EQ(s.cardinality("uid", "v"), 1u);
  for (const char* o : {"b", "c", "d", "e"}) s.observe("uid", "v", o);
  EXPECT_EQ(s.cardinality("uid", "v"), 5u);
  // keyed by digest: a pre-digested report lands on the same entry
  s.observe_digest("uid", hash_truncated("v"), "f");
  EXPECT_EQ(s.cardinality("uid", "v"), 6u);
  EXPECT_EQ(s.entry_count(), 1u);
}

TEST(QuorumStore, ThresholdBoundary) {
  QuorumStore s;  // k = 5
  s.observe("k", "x", "o1");
  EXPECT_FALSE(is_safe(s, "k", "x"));
  for (int i = 2; i <= 4; ++i) s.observe("k", "x", "o" + std::to_string(i));
  EXPECT_FALSE(is_safe(s, "k", "x"));
  s.observe("k", "x", "o5");
  EXPECT_TRUE(is_safe(s, "k", "x"));
  EXPECT_FALSE(is_safe(s, "k", "never-seen"));
}

TEST(ClassifyRequest, Examples) {
  QuorumStore s;
  for (int i = 0; i < 10; ++i) {
    s.observe("lang", "en", std::to_string(i));
    s.observe("v", "1", std::to_string(i));
    s.observe("t", "pv", std::to_string(i));
  }
  s.observe("uid", "zz91", "0");
  EXPECT_FALSE(classify_request(parse_url("https://a.example/?lang=en&v=1"), s));
  EXPECT_TRUE(classify_request(parse_url("https://a.example/?lang=en&v=1&uid=zz91"), s));
  EXPECT_FALSE(classify_request(parse_url("https://a.example/"), s));
}

// Brute-force oracle over a raw observation log.
TEST(QuorumStore, MatchesBruteForceAndIsMonotone) {
  std::mt19937_64 rng(3);
  QuorumStore store;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> truth;
  std::map<std::pair<std::string, std::string>, bool> was_safe;
  for (int i = 0; i < 5000; ++i) {
    const std::string key = rng() % 3 ? "uid" : "lang";
    const std::string value =
        key == "lang" ? std::string(rng() % 2 ? "en" : "fr")
                      : "id" + std::to_string(rng() % 400);
    const std::string observer = "user" + std::to_string(rng() % 60);
    store.observe(key, value, observer);
    truth[{key, value}].insert(observer);
    const bool safe = store.is_safe(key, value);
    ASSERT_EQ(safe, (truth[{key, value}].size() >= 5));
    if (was_safe[{key, value}]) ASSERT_TRUE(safe) << "safety reverted";
    was_safe[{key, value}] = safe;
  }
  for (const auto& [kv, observers] : truth)
    ASSERT_EQ(store.cardinality(kv.first, kv.second), observers.size());
}

TEST(QuorumStore, PopulationFixture) {
  QuorumStore store;
  for (int u = 0; u < 100; ++u) {
    const std::string user = "user-" + std::to_string(u);
    store.observe("lang", "en", user);
    store.observe("uid", "secret-token-" + std::to_string(u), user);
  }
  EXPECT_TRUE(store.is_safe("lang", "en"));
  for (int u = 0; u < 100; ++u)
    EXPECT_FALSE(store.is_safe("uid", "secret-token-" + std::to_string(u)));
}

TEST(QuorumStore, ExportHoldsNoRawValues) {
  QuorumStore store;
  std::vector<std::string> secrets;
  for (int u = 0; u < 20; ++u) {
    secrets.push_back("plaintext-identifier-" + std::to_string(u));
    store.observe("uid", secrets.back(), "observer-" + std::to_string(u));
  }
  std::ostringstream out;
  store.export_csv(out);
  const std::string text = out.str();
  for (const auto& s : secrets) EXPECT_EQ(text.find(s), std::string::npos);
  EXPECT_EQ(text.find("observer-"), std::string::npos);
  EXPECT_EQ(text.rfind("key,value_digest,cardinality\n", 0), 0u);
}

TEST(QuorumStore, CsvRoundTripActsAsFloor) {
  QuorumStore store;
  for (int i = 0; i < 4; ++i) store.observe("lang", "en", std::to_string(i));
  std::stringstream csv;
  store.export_csv(csv);
  auto back = QuorumStore::import_csv(csv);
  EXPECT_EQ(back.cardinality("lang", "en"), 4u);
  EXPECT_FALSE(back.is_safe("lang", "en"));
  back.observe("lang", "en", "new");
  EXPECT_TRUE(back.is_safe("lang", "en"));
}

TEST(QuorumStore, WindowAdvanceResets) {
  QuorumConfig c;
  c.window_days = 1;
  QuorumStore store(c);
  const std::int64_t day = 24LL * 3600 * 1000;
  store.advance_to(day / 2);
  for (int i = 0; i < 5; ++i) store.observe("a", "b", std::to_string(i));
  store.advance_to(day - 1);
  EXPECT_TRUE(store.is_safe("a", "b"));
  store.advance_to(day + 1);
  EXPECT_EQ(store.cardinality("a", "b"), 0u);
}

}  // namespace
}  // namespace trackscope
