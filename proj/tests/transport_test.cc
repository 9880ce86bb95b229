#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "trackscope/error.h"
#include "trackscope/transport.h"

namespace trackscope {
namespace {

template <typename T>
concept CanUnseal = requires(const T& t, const SealedMessage& m) { t.unseal(m); };

// Capabilities are enforced by the type system.
static_assert(CanUnseal<Collector>);
static_assert(!CanUnseal<Proxy>);
static_assert(!CanUnseal<Sealer>);

std::shared_ptr<const SealingScheme> scheme() {
  static auto s = std::make_shared<SecretBoxScheme>(SecretBoxScheme::from_seed(99));
  return s;
}

TEST(Seal, RoundTripAtCollector) {
  Sealer sealer(scheme());
  Collector collector(scheme());
  std::mt19937_64 rng(1);
  const std::string payload = R"({"schema":"v1-sanitized","x":1})";
  const auto msg = sealer.seal(payload, 10, rng);
  EXPECT_EQ(msg.send_time, 10);
  EXPECT_EQ(collector.unseal(msg), payload);
  const std::string env(msg.envelope.begin(), msg.envelope.end());
  EXPECT_EQ(env.find("v1-sanitized"), std::string::npos);
}

TEST(Seal, EqualPayloadsGiveDistinctEnvelopes) {
  Sealer sealer(scheme());
  std::mt19937_64 rng(1);
  const auto a = sealer.seal("same", 0, rng);
  const auto b = sealer.seal("same", 0, rng);
  EXPECT_NE(a.envelope, b.envelope);
}

TEST(Seal, TamperedEnvelopeIsRejected) {
  Sealer sealer(scheme());
  Collector collector(scheme());
  std::mt19937_64 rng(1);
  auto msg = sealer.seal("payload", 0, rng);
  msg.envelope.back() ^= 1;
  EXPECT_THROW(collector.unseal(msg), std::exception);
  Collector wrong_key(std::make_shared<SecretBoxScheme>(SecretBoxScheme::from_seed(5)));
  msg.envelope.back() ^= 1;
  EXPECT_THROW(wrong_key.unseal(msg), std::exception);
}

TEST(Route, DegenerateAndDeterministic) {
  Sealer sealer(scheme());
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto m = sealer.seal("m" + std::to_string(i), 0, rng);
    EXPECT_EQ(route(m, 1), 0);
    EXPECT_EQ(route(m, 7), route(m, 7));
  }
  EXPECT_THROW(route(SealedMessage{}, 0), Error);
}

TEST(Route, BalancedWithinThreeSigma) {
  Sealer sealer(scheme());
  std::mt19937_64 rng(3);
  constexpr int kN = 10000, kP = 4;
  std::vector<int> counts(kP);
  for (int i = 0; i < kN; ++i) ++counts[route(sealer.seal("x", i, rng), kP)];
  const double sigma = std::sqrt(kN * 0.25 * 0.75);
  for (int c : counts) EXPECT_NEAR(c, kN / kP, 3 * sigma);
}

TEST(ClientChannel, ZeroWindowIsFifo) {
  Sealer sealer(scheme());
  ClientChannel ch("c", 0, 0, 1);
  for (int i = 0; i < 5; ++i) ch.send(sealer, std::to_string(i), 100);
  Collector collector(scheme());
  const auto out = ch.dispatch(100);
  ASSERT_EQ(out.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(collector.unseal(out[i]), std::to_string(i));
  EXPECT_TRUE(ch.dispatch(1000).empty());
}

TEST(ClientChannel, DispatchTimesStayInWindow) {
  Sealer sealer(scheme());
  ClientChannel ch("c", 100, 500, 4);
  for (int i = 0; i < 200; ++i) ch.send(sealer, "p", 1000);
  EXPECT_TRUE(ch.dispatch(1099).empty());
  EXPECT_GE(ch.next_dispatch_time(), 1100);
  EXPECT_EQ(ch.dispatch(1500).size(), 200u);
  EXPECT_EQ(ch.pending(), 0u);
}

TEST(ClientChannel, AdjacentSendsSwapAboutHalfTheTime) {
  Sealer sealer(scheme());
  Collector collector(scheme());
  int swaps = 0;
  constexpr int kTrials = 1000;
  for (int seed = 0; seed < kTrials; ++seed) {
    ClientChannel ch("c", 0, 30000, static_cast<std::uint64_t>(seed));
    ch.send(sealer, "first", 0);
    ch.send(sealer, "second", 1);
    const auto out = ch.dispatch(31001);
    ASSERT_EQ(out.size(), 2u);
    if (collector.unseal(out[0]) == "second") ++swaps;
  }
  EXPECT_NEAR(static_cast<double>(swaps) / kTrials, 0.5, 0.05);
}

std::vector<OutgoingMessage> uniform_traffic(int clients, int n, std::uint64_t seed,
                                             std::vector<std::size_t>* senders) {
  std::mt19937_64 rng(seed);
  std::vector<OutgoingMessage> out;
  for (int i = 0; i < n; ++i) {
    const std::size_t c = rng() % clients;
    // identically shaped payloads; the id only lets the test recover truth
    char buf[32];
    std::snprintf(buf, sizeof buf, "{\"id\":%06d}", i);
    out.push_back({c, buf, static_cast<std::int64_t>(rng() % 600000)});
    if (senders) senders->push_back(c);
  }
  return out;
}

TEST(RunSimulation, SingleMessage) {
  TransportConfig cfg;
  const auto r = run_simulation(cfg, {{0, "hello", 5}});
  ASSERT_EQ(r.collector_log.size(), 1u);
  EXPECT_EQ(r.collector_log[0].payload, "hello");
  EXPECT_GE(r.collector_log[0].arrival_time, 5);
  ASSERT_EQ(r.proxy_logs.size(), 1u);
  EXPECT_EQ(r.proxy_logs[0][0].source_id, "client-0");
}

TEST(RunSimulation, ConservationAndDeterminism) {
  TransportConfig cfg{.clients = 10, .proxies = 4, .seed = 77};
  const auto msgs = uniform_traffic(10, 3000, 1, nullptr);
  const auto a = run_simulation(cfg, msgs);
  std::size_t total = 0;
  for (const auto& log : a.proxy_logs) total += log.size();
  EXPECT_EQ(total, msgs.size());
  EXPECT_EQ(a.collector_log.size(), msgs.size());
  std::multiset<std::string> sent, got;
  for (const auto& m : msgs) sent.insert(m.payload);
  for (const auto& e : a.collector_log) got.insert(e.payload);
  EXPECT_EQ(sent, got);

  const auto b = run_simulation(cfg, msgs);
  std::ostringstream la, lb, pa, pb;
  write_collector_log(la, a);
  write_collector_log(lb, b);
  write_proxy_logs(pa, a);
  write_proxy_logs(pb, b);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_EQ(pa.str(), pb.str());
}

TEST(RunSimulation, CollectorLogCarriesNoSender) {
  TransportConfig cfg{.clients = 5, .proxies = 3};
  const auto r = run_simulation(cfg, uniform_traffic(5, 200, 2, nullptr));
  std::ostringstream out;
  write_collector_log(out, r);
  const std::string text = out.str();
  EXPECT_EQ(text.find("client-"), std::string::npos);
  EXPECT_EQ(text.find("source"), std::string::npos);
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    EXPECT_EQ(keys, (std::set<std::string>{"arrival_time", "payload"}));
  }
}

TEST(RunSimulation, ProxyShareBound) {
  TransportConfig cfg{.clients = 20, .proxies = 4, .seed = 3};
  const auto r = run_simulation(cfg, uniform_traffic(20, 10000, 3, nullptr));
  const double eps = 3 * std::sqrt(0.25 * 0.75 / 10000);
  EXPECT_LE(max_proxy_share(r), 0.25 + eps);
}

TEST(MutualInformation, KnownValues) {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 0, 1, 1}, c{0, 1, 0, 1};
  EXPECT_NEAR(mutual_information(a, b), 1.0, 1e-12);
  EXPECT_NEAR(mutual_information(a, c), 0.0, 1e-12);
}

// Adversary: bucket collector arrivals by time and try to recover senders.
// Compare against the same estimate with sender labels permuted.
TEST(RunSimulation, ArrivalTimesDoNotRevealSenders) {
  constexpr int kClients = 8, kMessages = 4000;
  std::vector<std::size_t> senders;
  const auto msgs = uniform_traffic(kClients, kMessages, 9, &senders);
  TransportConfig cfg{.clients = kClients, .proxies = 4, .seed = 11};
  const auto r = run_simulation(cfg, msgs);
  std::vector<int> sender, bucket;
  for (const auto& e : r.collector_log) {
    const int id = std::stoi(e.payload.substr(6, 6));
    sender.push_back(static_cast<int>(senders[id]));
    bucket.push_back(static_cast<int>(e.arrival_time / 30000));
  }
  const double observed = mutual_information(sender, bucket);
  std::mt19937_64 rng(12);
  std::vector<double> baseline;
  for (int i = 0; i < 200; ++i) {
    auto shuffled = sender;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    baseline.push_back(mutual_information(shuffled, bucket));
  }
  std::sort(baseline.begin(), baseline.end());
  EXPECT_LE(observed, baseline.back()) << "baseline median " << baseline[100];
}

}  // namespace
}  // namespace trackscope
