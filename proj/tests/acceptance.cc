// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures (capped at 1). Every tolerance is a named constant.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.h"
#include "trackscope/aggregator.h"
#include "trackscope/generator.h"
#include "trackscope/md5_hash.h"
#include "trackscope/pipeline.h"
#include "trackscope/quorum.h"
#include "trackscope/report_io.h"
#include "trackscope/sanitizer.h"
#include "trackscope/transport.h"
#include "trackscope/url.h"

namespace ts = trackscope;
namespace tt = trackscope::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kReachRuntimeLimitS = 10.0;      // criterion 1
constexpr double kInclusionSigmas = 4.0;          // criterion 2
constexpr int kProxyCountSlack = 200;             // criterion 6
constexpr double kInversionSlack = 0.05;          // criterion 6
constexpr double kLargeRunLimitS = 60.0;          // criterion 10

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// A check returns an empty string on success or a reason.
using Check = std::function<std::string()>;

const ts::GeoTable& geo() {
  static const ts::GeoTable g = ts::GeoTable::load(ts::PipelineConfig::defaults().geo_table);
  return g;
}

std::vector<ts::EventLogEntry> entries_of(const std::vector<ts::RequestEvent>& events) {
  std::vector<ts::EventLogEntry> out;
  out.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) out.push_back({i + 1, events[i]});
  return out;
}

ts::SyntheticCorpusSpec fixture_spec() {
  std::ifstream in(tt::kFixtureDir + "/two_month_spec.json");
  return ts::corpus_spec_from_json(nlohmann::json::parse(in));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + TRACKSCOPE_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quote_path(const fs::path& p) { return "\"" + p.string() + "\""; }

// 1. Reach and site reach equal a full-scan recount on random corpora.
std::string reach_matches_oracle() {
  const auto& db = tt::fixture_db();
  // host -> tracker id, resolved once by scanning every entry
  std::map<std::string, std::string> owner;
  for (const auto& h : tt::corpus_hosts())
    owner[h] = tt::naive_tracker_id(db.entries(), h);
  std::set<std::string> ids;
  for (const auto& [h, id] : owner) ids.insert(id);
  ids.insert("never_seen_tracker");

  std::mt19937_64 rng(2024);
  double timed = 0;
  for (int c = 0; c < 20; ++c) {
    tt::CorpusShape shape;
    shape.pages = 1000 + static_cast<int>(rng() % 9001);
    shape.sites = 20 + static_cast<int>(rng() % 200);
    const auto corpus = tt::random_corpus(100 + c, shape);

    std::map<std::string, std::int64_t> pages;
    std::map<std::string, std::set<std::string>> sites;
    std::set<std::string> all_sites;
    for (const auto& p : corpus) {
      all_sites.insert(p.hostname_digest);
      std::set<std::string> here;
      for (const auto& [h, tp] : p.third_parties) here.insert(owner.at(h));
      for (const auto& id : here) {
        ++pages[id];
        sites[id].insert(p.hostname_digest);
      }
    }
    for (const auto& id : ids) {
      const double want_reach =
          static_cast<double>(pages[id]) / static_cast<double>(corpus.size());
      const double want_site = static_cast<double>(sites[id].size()) /
                               static_cast<double>(all_sites.size());
      const auto t0 = Clock::now();
      const double got_reach = ts::tracker_reach(corpus, db, id);
      const double got_site = ts::site_reach(corpus, db, id);
      timed += seconds_since(t0);
      if (got_reach != want_reach || got_site != want_site) {
        std::ostringstream why;
        why << "corpus " << c << " tracker " << id << ": reach " << got_reach
            << " vs " << want_reach << ", site reach " << got_site << " vs "
            << want_site;
        return why.str();
      }
    }
  }
  if (timed >= kReachRuntimeLimitS)
    return "runtime " + std::to_string(timed) + " s";
  return {};
}

// 2. Reach of a tracker included with probability p, through the whole
// pipeline.
std::string reach_tracks_inclusion() {
  for (double p : {0.1, 0.5, 0.9}) {
    ts::SyntheticCorpusSpec spec;
    spec.seed = 31;
    spec.pages_per_month = 10000;
    spec.site_count = 200;
    spec.user_count = 300;
    ts::SyntheticTracker t;
    t.name = "ga";
    t.hostnames = {"www.google-analytics.com"};
    t.inclusion_probability = p;
    spec.trackers.push_back(t);
    const auto corpus = ts::generate_corpus(spec, geo());
    const auto run = ts::run_pipeline(ts::PipelineConfig::defaults(), entries_of(corpus.events));
    if (run.reports.size() != 1) return "expected one month";
    const auto* ga = run.reports[0].find_tracker("google_analytics");
    if (!ga) return "tracker missing";
    const double n = static_cast<double>(run.reports[0].corpus_size);
    const double tol = kInclusionSigmas * std::sqrt(p * (1 - p) / n);
    if (std::abs(ga->reach - p) > tol) {
      std::ostringstream why;
      why << "p=" << p << " reach " << ga->reach << " tolerance " << tol;
      return why.str();
    }
  }
  return {};
}

// 3. Longest-pattern matching.
std::string maximal_depth_match() {
  std::istringstream csv(
      "pattern,tracker_id,tracker_name,company_id,category\n"
      "a.example.com,ta,A,acme,advertising\n"
      "b.example.com,tb,B,acme,advertising\n"
      "example.com,tx,Example,acme,misc\n");
  const auto small = ts::TrackerDb::parse(csv);
  const auto* a = ts::match_domain(small, "a.a.example.com");
  const auto* c = ts::match_domain(small, "c.example.com");
  if (!a || a->pattern != "a.example.com") return "a.a.example.com";
  if (!c || c->pattern != "example.com") return "c.example.com";

  const auto& db = tt::fixture_db();
  std::vector<std::string> tails;
  for (const auto& e : db.entries()) tails.push_back(e.pattern);
  for (const char* t : {"example.com", "net", "co.uk", "unrelated.org"}) tails.push_back(t);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::string host = tails[rng() % tails.size()];
    const int extra = static_cast<int>(rng() % 4);
    for (int j = 0; j < extra; ++j) host = "l" + std::to_string(rng() % 50) + "." + host;
    const auto* got = db.match_domain(host);
    const auto* want = tt::naive_match(db.entries(), host);
    if ((got == nullptr) != (want == nullptr) ||
        (got && got->pattern != want->pattern))
      return "mismatch on " + host;
  }
  return {};
}

// 4. What leaves the client carries digests only.
std::string sanitized_output_is_private() {
  if (ts::first_level_path("/user/jack/home") != "/user/") return "first level path";
  if (ts::hash_truncated("/user/") != "00d6b15ae97d06f7") return "path digest";

  ts::SyntheticCorpusSpec spec;
  spec.seed = 5;
  spec.pages_per_month = 1000;
  spec.private_path_share = 0.3;
  ts::SyntheticTracker t;
  t.name = "fb";
  t.hostnames = {"connect.facebook.net"};
  spec.trackers.push_back(t);
  const auto corpus = ts::generate_corpus(spec, geo());
  std::set<std::string> hosts, paths;
  for (const auto& e : corpus.events)
    if (e.stage == ts::Stage::kBeforeRequest &&
        e.resource_type == ts::ResourceType::kMainFrame) {
      const auto url = ts::parse_url(e.url);
      hosts.insert(url.hostname);
      paths.insert(url.path);
    }
  const auto run = ts::run_pipeline(ts::PipelineConfig::defaults(), entries_of(corpus.events));
  if (run.collected.size() != 1000) return "expected 1000 records";
  const std::regex digest("^[0-9a-f]{16}$");
  for (const auto& page : run.collected) {
    const std::string line = ts::serialize_sanitized(page);
    if (!std::regex_match(page.hostname_digest, digest) ||
        !std::regex_match(page.path_digest, digest))
      return "digest shape: " + line;
    for (const auto& h : hosts)
      if (line.find(h) != std::string::npos) return "raw host " + h;
    for (const auto& p : paths)
      if (p.size() > 1 && line.find(p) != std::string::npos) return "raw path " + p;
    if (line.find("/user/") != std::string::npos) return "raw path prefix";
  }
  return {};
}

// Independent query split for generator URLs: "...?a=1&b=2".
std::vector<std::pair<std::string, std::string>> naive_query(const std::string& url) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto q = url.find('?');
  if (q == std::string::npos) return out;
  std::stringstream rest(url.substr(q + 1));
  std::string part;
  while (std::getline(rest, part, '&')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(part.substr(0, eq), part.substr(eq + 1));
  }
  return out;
}

// 5. Quorum decisions equal a brute-force distinct-observer count.
std::string quorum_matches_brute_force() {
  auto events = ts::generate_corpus(fixture_spec(), geo()).events;
  events.resize(10000);
  const ts::QuorumConfig config;  // k = 5, 30-day windows
  const auto stores = ts::build_quorum_stores(config, entries_of(events));

  const std::int64_t window_ms = 30LL * 24 * 3600 * 1000;
  std::map<std::int64_t, std::map<std::pair<std::string, std::string>, std::set<std::string>>>
      observers;
  std::set<std::string> uid_values;
  for (const auto& e : events) {
    if (e.stage != ts::Stage::kBeforeRequest ||
        e.resource_type == ts::ResourceType::kMainFrame)
      continue;
    for (const auto& [k, v] : naive_query(e.url)) {
      observers[e.timestamp / window_ms][{k, v}].insert(e.user_id);
      if (k == "uid") uid_values.insert(v);
    }
  }
  if (uid_values.empty()) return "fixture has no per-user identifiers";
  std::size_t checked = 0;
  for (const auto& [window, counts] : observers) {
    const auto it = stores.find(window);
    if (it == stores.end()) return "missing window";
    for (const auto& [kv, users] : counts) {
      const bool want = static_cast<int>(users.size()) >= config.k;
      if (it->second.is_safe(kv.first, kv.second) != want)
        return "is_safe(" + kv.first + "=" + kv.second + ") with " +
               std::to_string(users.size()) + " observers";
      if (kv.first == "uid" && (users.size() != 1 || it->second.is_safe(kv.first, kv.second)))
        return "per-user value judged safe: " + kv.second;
      ++checked;
    }
  }
  return checked > 0 ? std::string() : "nothing checked";
}

// 6. Transport: collector sees payload and arrival time only, routing is
// balanced and adjacent messages are reordered about half the time.
std::string transport_properties() {
  constexpr int kMessages = 10000, kProxies = 4, kClients = 25;
  std::mt19937_64 rng(6);
  std::vector<ts::OutgoingMessage> msgs;
  for (int i = 0; i < kMessages; ++i)
    msgs.push_back({static_cast<std::size_t>(rng() % kClients),
                    "{\"n\":" + std::to_string(i) + "}",
                    static_cast<std::int64_t>(rng() % 3600000)});
  const ts::TransportConfig config{.clients = kClients, .proxies = kProxies, .seed = 6};
  const auto r = ts::run_simulation(config, msgs);

  std::ostringstream log;
  ts::write_collector_log(log, r);
  std::istringstream lines(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    if (keys != std::set<std::string>{"arrival_time", "payload"})
      return "collector entry keys: " + line;
    if (line.find("client-") != std::string::npos) return "sender leaked: " + line;
    ++n;
  }
  if (n != kMessages) return "collector saw " + std::to_string(n);
  for (const auto& proxy : r.proxy_logs)
    if (std::abs(static_cast<int>(proxy.size()) - kMessages / kProxies) > kProxyCountSlack)
      return "proxy load " + std::to_string(proxy.size());

  auto scheme = std::make_shared<ts::SecretBoxScheme>(ts::SecretBoxScheme::from_seed(61));
  ts::Sealer sealer(scheme);
  ts::Collector collector(scheme);
  constexpr int kTrials = 1000;
  int swapped = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    ts::ClientChannel ch("c", config.delay_min_ms, config.delay_max_ms,
                         static_cast<std::uint64_t>(trial));
    ch.send(sealer, "first", 0);
    ch.send(sealer, "second", 1);
    const auto out = ch.dispatch(config.delay_max_ms + 1);
    if (out.size() != 2) return "channel lost a message";
    swapped += collector.unseal(out[0]) == "second";
  }
  const double rate = static_cast<double>(swapped) / kTrials;
  if (std::abs(rate - 0.5) > kInversionSlack) return "inversion rate " + std::to_string(rate);
  return {};
}

// 7. A company's reach counts each page once across all its trackers.
std::string company_union_reach() {
  const auto& db = tt::fixture_db();
  for (std::uint64_t seed : {71, 72, 73}) {
    tt::CorpusShape shape;
    shape.pages = 3000;
    const auto corpus = tt::random_corpus(seed, shape);
    const auto report = ts::aggregate_month(corpus, db, *ts::MonthKey::parse(shape.month));
    for (const auto& c : report.companies) {
      std::int64_t pages = 0;
      for (const auto& p : corpus) {
        bool hit = false;
        for (const auto& [h, tp] : p.third_parties) {
          const auto* e = tt::naive_match(db.entries(), h);
          hit = hit || (e ? e->company_id : h) == c.company_id;
        }
        pages += hit;
      }
      const double want = static_cast<double>(pages) / static_cast<double>(corpus.size());
      if (c.reach != want)
        return c.company_id + " reach " + std::to_string(c.reach) + " vs " + std::to_string(want);
      double sum = 0, max = 0;
      for (const auto& id : c.trackers) {
        const auto* t = report.find_tracker(id);
        if (!t) return "member tracker missing: " + id;
        sum += t->reach;
        max = std::max(max, t->reach);
      }
      if (c.reach < max || c.reach > sum + 1e-12) return c.company_id + " outside member bounds";
    }
    const auto* google = report.find_company("google");
    if (!google || google->trackers.size() < 2) return "google should group several trackers";
  }
  return {};
}

// 8. Collapsing onto TLD+2 never changes counter totals.
std::string merge_conserves_counters() {
  static const std::vector<std::string> hosts = {
      "a.b.track.example.com", "c.b.track.example.com", "b.track.example.com",
      "x.cdn.example.co.uk",   "y.x.cdn.example.co.uk", "stats.g.doubleclick.net",
      "u1.userid-cdn.example", "u2.userid-cdn.example", "p.q.r.s.example.org"};
  const std::vector<ts::CleaningRule> rules = {{"userid-cdn.example"}};
  std::mt19937_64 rng(8);
  for (int record = 0; record < 1000; ++record) {
    std::map<std::string, ts::ThirdPartyStats> tps;
    ts::ThirdPartyStats before;
    for (const auto& h : hosts) {
      if (rng() % 2) continue;
      tps[h] = tt::random_stats(rng, h);
      before += tps[h];
    }
    ts::ThirdPartyStats after;
    for (const auto& [h, tp] : ts::merge_third_parties(tps, rules, ts::default_suffix_list()))
      after += tp;
    if (!(after == before)) return "record " + std::to_string(record);
  }
  return {};
}

// 9. Month-over-month HTTPS change equals the generator's counts; content
// length quartiles equal a sort-based recount.
std::string https_and_content_length() {
  const auto corpus = ts::generate_corpus(fixture_spec(), geo());
  const auto run = ts::run_pipeline(ts::PipelineConfig::defaults(), entries_of(corpus.events));
  if (run.reports.size() != 2) return "expected two months";
  const auto& truth = corpus.truth["months"];
  auto truth_share = [&](const std::string& m) {
    return truth[m]["secure_pages"].get<double>() / truth[m]["pages"].get<double>();
  };
  const double want = truth_share("2018-05") - truth_share("2018-04");
  const double got = run.reports[1].https_series.at("all_sites") -
                     run.reports[0].https_series.at("all_sites");
  if (got != want) return "https delta " + std::to_string(got) + " vs " + std::to_string(want);

  for (const auto& report : run.reports) {
    std::map<std::string, std::pair<double, int>> per_site;
    for (const auto& p : run.collected) {
      if (p.month != report.month.to_string()) continue;
      std::int64_t bytes = 0;
      for (const auto& [h, tp] : p.third_parties) bytes += tp.content_length_sum;
      per_site[p.hostname_digest].first += static_cast<double>(bytes);
      per_site[p.hostname_digest].second += 1;
    }
    std::vector<double> means;
    for (const auto& [s, v] : per_site) means.push_back(v.first / v.second / 1e6);
    const auto& cl = report.content_length;
    if (cl.median_mb != tt::oracle_percentile(means, 0.5) ||
        cl.q1_mb != tt::oracle_percentile(means, 0.25) ||
        cl.q3_mb != tt::oracle_percentile(means, 0.75))
      return "content length quartiles for " + report.month.to_string();
  }
  return {};
}

// 10. The CLI is deterministic and a 10^4-page month runs in time.
std::string cli_determinism_and_scale() {
  const fs::path dir = fs::temp_directory_path() / "trackscope_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto events = dir / "events.ndjson";
  if (cli("generate --spec " + quote_path(tt::kFixtureDir + "/two_month_spec.json") +
          " --out " + quote_path(events)) != 0)
    return "generate failed";
  for (const char* out : {"a", "b"})
    if (cli("run --events " + quote_path(events) + " --out " + quote_path(dir / out)) != 0)
      return "run failed";
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    if (slurp(entry.path()) != slurp(dir / "b" / entry.path().filename()))
      return "differs: " + entry.path().filename().string();
    ++files;
  }
  if (files == 0) return "no output";

  auto spec = fixture_spec();
  spec.months = {"2018-04"};
  spec.https_schedule.resize(1);
  spec.pages_per_month = 10000;
  std::ofstream(dir / "big_spec.json") << ts::to_json(spec).dump();
  const auto big = dir / "big.ndjson";
  if (cli("generate --spec " + quote_path(dir / "big_spec.json") + " --out " + quote_path(big)) != 0)
    return "generate failed";
  const auto t0 = Clock::now();
  if (cli("run --events " + quote_path(big) + " --out " + quote_path(dir / "big")) != 0)
    return "large run failed";
  const double elapsed = seconds_since(t0);
  fs::remove_all(dir);
  if (elapsed >= kLargeRunLimitS) return "large run took " + std::to_string(elapsed) + " s";
  return {};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Check>> checks = {
      {"tracker and site reach equal a full recount", reach_matches_oracle},
      {"reach within 4 sigma of inclusion probability", reach_tracks_inclusion},
      {"hostnames match the deepest pattern", maximal_depth_match},
      {"sanitized output carries digests only", sanitized_output_is_private},
      {"quorum equals brute-force observer count", quorum_matches_brute_force},
      {"transport hides senders and balances proxies", transport_properties},
      {"company reach is a union over its trackers", company_union_reach},
      {"hostname merge conserves counters", merge_conserves_counters},
      {"https change and content length quartiles", https_and_content_length},
      {"cli output is deterministic and scales", cli_determinism_and_scale},
  };
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    std::string why;
    try {
      why = checks[i].second();
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::printf("PASS criterion %zu: %s\n", i + 1, checks[i].first.c_str());
    } else {
      ++failures;
      std::printf("FAIL criterion %zu: %s (%s)\n", i + 1, checks[i].first.c_str(), why.c_str());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
