#include "trackscope/generator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "trackscope/error.h"
#include "trackscope/md5_hash.h"
#include "trackscope/month.h"

namespace trackscope {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::kSpecError, what + " must be in [0,1]");
}

void check_distribution(const std::map<std::string, double>& d,
                        const std::string& what) {
  if (d.empty()) throw Error(ErrorCode::kSpecError, what + " is empty");
  for (const auto& [k, p] : d) check_probability(p, what + "." + k);
}

// Picks a key with probability proportional to its weight.
std::string sample_key(const std::map<std::string, double>& weights,
                       std::mt19937_64& rng) {
  std::vector<double> w;
  for (const auto& [k, v] : weights) w.push_back(v);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  auto it = weights.begin();
  std::advance(it, pick(rng));
  return it->first;
}

std::string replace_all(std::string s, std::string_view from,
                        std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

struct CountryPrefix {
  std::uint32_t base = 0;
  std::uint32_t size = 1;
};

std::map<std::string, CountryPrefix> v4_prefixes(const GeoTable& geo) {
  std::map<std::string, CountryPrefix> out;
  for (const auto& prefix : geo.prefixes()) {
    if (!prefix.network.is_v4 || out.contains(prefix.country)) continue;
    const int bits = prefix.length - 96;
    std::uint32_t base = 0;
    for (int i = 12; i < 16; ++i) base = (base << 8) | prefix.network.bytes[i];
    const std::uint32_t size =
        bits >= 32 ? 1u : static_cast<std::uint32_t>(1ULL << (32 - bits));
    out[prefix.country] = {base & ~(size - 1), size};
  }
  return out;
}

std::string format_v4(std::uint32_t a) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", a >> 24, (a >> 16) & 0xff,
                (a >> 8) & 0xff, a & 0xff);
  return buf;
}

struct TrackerTruth {
  std::int64_t pages = 0;
  std::set<int> sites;
};

struct MonthTruth {
  std::int64_t pages = 0;
  std::int64_t secure_pages = 0;
  std::set<int> sites;
  std::map<std::string, TrackerTruth> trackers;
};

}  // namespace

std::string site_hostname(int index) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), index % 5 == 4 ? "www.site%04d.co.uk"
                                                 : "www.site%04d.com",
                index);
  return buf;
}

void SyntheticCorpusSpec::validate() const {
  if (months.empty()) throw Error(ErrorCode::kSpecError, "no months");
  for (const auto& m : months)
    if (!MonthKey::parse(m))
      throw Error(ErrorCode::kSpecError, "bad month '" + m + "'");
  if (pages_per_month < 0 || site_count < 1 || user_count < 1 ||
      paths_per_site < 1 || tabs_per_user < 1)
    throw Error(ErrorCode::kSpecError, "counts must be positive");
  if (zipf_exponent < 0)
    throw Error(ErrorCode::kSpecError, "zipf_exponent must be >= 0");
  check_probability(private_path_share, "private_path_share");
  check_distribution(user_countries, "user_countries");
  for (const auto& step : https_schedule) {
    if (!MonthKey::parse(step.month))
      throw Error(ErrorCode::kSpecError, "bad https_schedule month");
    check_probability(step.secure_site_share, "secure_site_share");
  }
  std::set<std::string> names;
  for (const auto& t : trackers) {
    if (t.name.empty() || !names.insert(t.name).second)
      throw Error(ErrorCode::kSpecError, "tracker names must be unique");
    if (t.hostnames.empty())
      throw Error(ErrorCode::kSpecError, t.name + ": no hostnames");
    check_probability(t.inclusion_probability, t.name + ".inclusion_probability");
    check_probability(t.cookie_probability, t.name + ".cookie_probability");
    check_probability(t.set_cookie_probability,
                      t.name + ".set_cookie_probability");
    check_probability(t.identifier_probability,
                      t.name + ".identifier_probability");
    check_probability(t.https_probability, t.name + ".https_probability");
    check_probability(t.block_probability, t.name + ".block_probability");
    check_probability(t.external_block_probability,
                      t.name + ".external_block_probability");
    check_probability(t.cache_probability, t.name + ".cache_probability");
    check_distribution(t.content_types, t.name + ".content_types");
    for (const auto& [type, p] : t.content_types)
      if (!parse_resource_type(type) || type == "main_frame")
        throw Error(ErrorCode::kSpecError,
                    t.name + ": bad content type '" + type + "'");
    check_distribution(t.server_countries, t.name + ".server_countries");
    if (t.requests_per_type < 1 || t.content_length_sigma < 0)
      throw Error(ErrorCode::kSpecError, t.name + ": bad request shape");
    if (t.sites)
      for (int s : *t.sites)
        if (s < 0 || s >= site_count)
          throw Error(ErrorCode::kSpecError, t.name + ": site out of range");
  }
}

SyntheticCorpusSpec corpus_spec_from_json(const json& j) {
  SyntheticCorpusSpec spec;
  try {
    spec.seed = j.value("seed", spec.seed);
    spec.months = j.value("months", spec.months);
    spec.pages_per_month = j.value("pages_per_month", spec.pages_per_month);
    if (j.contains("sites")) {
      const auto& s = j.at("sites");
      spec.site_count = s.value("count", spec.site_count);
      spec.zipf_exponent = s.value("zipf_exponent", spec.zipf_exponent);
      spec.paths_per_site = s.value("paths_per_site", spec.paths_per_site);
      spec.private_path_share =
          s.value("private_path_share", spec.private_path_share);
    }
    if (j.contains("users")) {
      const auto& u = j.at("users");
      spec.user_count = u.value("count", spec.user_count);
      spec.user_countries = u.value("countries", spec.user_countries);
      spec.tabs_per_user = u.value("tabs", spec.tabs_per_user);
    }
    for (const auto& step : j.value("https_schedule", json::array()))
      spec.https_schedule.push_back(
          {step.at("month").get<std::string>(),
           step.at("secure_site_share").get<double>()});
    for (const auto& t : j.value("trackers", json::array())) {
      SyntheticTracker tr;
      tr.name = t.at("name").get<std::string>();
      tr.hostnames = t.at("hostnames").get<std::vector<std::string>>();
      tr.inclusion_probability =
          t.value("inclusion_probability", tr.inclusion_probability);
      if (t.contains("sites")) tr.sites = t.at("sites").get<std::vector<int>>();
      tr.content_types = t.value("content_types", tr.content_types);
      tr.requests_per_type = t.value("requests_per_type", tr.requests_per_type);
      tr.cookie_probability = t.value("cookie_probability", tr.cookie_probability);
      tr.set_cookie_probability =
          t.value("set_cookie_probability", tr.set_cookie_probability);
      tr.identifier_probability =
          t.value("identifier_probability", tr.identifier_probability);
      tr.https_probability = t.value("https_probability", tr.https_probability);
      tr.block_probability = t.value("block_probability", tr.block_probability);
      tr.external_block_probability =
          t.value("external_block_probability", tr.external_block_probability);
      tr.cache_probability = t.value("cache_probability", tr.cache_probability);
      tr.server_countries = t.value("server_countries", tr.server_countries);
      if (t.contains("content_length")) {
        tr.content_length_mu =
            t.at("content_length").value("mu", tr.content_length_mu);
        tr.content_length_sigma =
            t.at("content_length").value("sigma", tr.content_length_sigma);
      }
      spec.trackers.push_back(std::move(tr));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSpecError, e.what());
  }
  spec.validate();
  return spec;
}

ordered_json to_json(const SyntheticCorpusSpec& spec) {
  ordered_json j;
  j["seed"] = spec.seed;
  j["months"] = spec.months;
  j["pages_per_month"] = spec.pages_per_month;
  j["sites"] = {{"count", spec.site_count},
                {"zipf_exponent", spec.zipf_exponent},
                {"paths_per_site", spec.paths_per_site},
                {"private_path_share", spec.private_path_share}};
  j["users"] = {{"count", spec.user_count},
                {"countries", spec.user_countries},
                {"tabs", spec.tabs_per_user}};
  j["https_schedule"] = ordered_json::array();
  for (const auto& s : spec.https_schedule)
    j["https_schedule"].push_back(
        {{"month", s.month}, {"secure_site_share", s.secure_site_share}});
  j["trackers"] = ordered_json::array();
  for (const auto& t : spec.trackers) {
    ordered_json o;
    o["name"] = t.name;
    o["hostnames"] = t.hostnames;
    o["inclusion_probability"] = t.inclusion_probability;
    if (t.sites) o["sites"] = *t.sites;
    o["content_types"] = t.content_types;
    o["requests_per_type"] = t.requests_per_type;
    o["cookie_probability"] = t.cookie_probability;
    o["set_cookie_probability"] = t.set_cookie_probability;
    o["identifier_probability"] = t.identifier_probability;
    o["https_probability"] = t.https_probability;
    o["block_probability"] = t.block_probability;
    o["external_block_probability"] = t.external_block_probability;
    o["cache_probability"] = t.cache_probability;
    o["server_countries"] = t.server_countries;
    o["content_length"] = {{"mu", t.content_length_mu},
                           {"sigma", t.content_length_sigma}};
    j["trackers"].push_back(std::move(o));
  }
  return j;
}

GeneratedCorpus generate_corpus(const SyntheticCorpusSpec& spec,
                                const GeoTable& geo) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto chance = [&](double p) { return p > 0.0 && unit(rng) < p; };

  const auto prefixes = v4_prefixes(geo);
  auto server_ip = [&](const std::string& country) {
    const auto it = prefixes.find(country);
    if (it == prefixes.end())
      throw Error(ErrorCode::kSpecError,
                  "no IPv4 prefix for country '" + country + "'");
    std::uniform_int_distribution<std::uint32_t> offset(0, it->second.size - 1);
    return format_v4(it->second.base + offset(rng));
  };

  std::vector<double> popularity;
  for (int i = 0; i < spec.site_count; ++i)
    popularity.push_back(1.0 / std::pow(i + 1.0, spec.zipf_exponent));
  std::discrete_distribution<int> pick_site(popularity.begin(),
                                            popularity.end());
  std::uniform_int_distribution<int> pick_user(0, spec.user_count - 1);
  std::uniform_int_distribution<int> pick_path(0, spec.paths_per_site - 1);

  struct User {
    std::string id;
    std::string token;
    std::string country;
    std::int64_t page_count = 0;
    std::int64_t last_time = 0;
  };
  std::vector<User> users;
  for (int u = 0; u < spec.user_count; ++u) {
    User user;
    user.id = "user-" + std::to_string(u);
    user.token = hash_truncated(std::to_string(spec.seed) + ":" + user.id);
    user.country = sample_key(spec.user_countries, rng);
    users.push_back(std::move(user));
  }

  std::vector<std::vector<bool>> eligible(spec.trackers.size());
  for (std::size_t t = 0; t < spec.trackers.size(); ++t) {
    eligible[t].assign(spec.site_count, !spec.trackers[t].sites.has_value());
    if (spec.trackers[t].sites)
      for (int s : *spec.trackers[t].sites) eligible[t][s] = true;
  }

  struct Timed {
    std::int64_t time;
    std::uint64_t order;
    RequestEvent event;
  };
  std::vector<Timed> timed;
  std::uint64_t order = 0;
  std::uint64_t request_counter = 0;
  auto emit = [&](RequestEvent e) {
    timed.push_back({e.timestamp, order++, std::move(e)});
  };

  std::map<std::string, MonthTruth> truth;

  for (const auto& month_text : spec.months) {
    const MonthKey month = *MonthKey::parse(month_text);
    const std::int64_t month_start = month.start_ms();
    std::optional<double> secure_share;
    for (const auto& step : spec.https_schedule)
      if (step.month == month_text) secure_share = step.secure_site_share;
    const int secure_sites =
        secure_share ? static_cast<int>(std::floor(*secure_share * spec.site_count + 0.5))
                     : 0;

    std::uniform_int_distribution<std::int64_t> start_jitter(0, 3600 * 1000);
    for (auto& user : users) user.last_time = month_start + start_jitter(rng);
    std::uniform_int_distribution<std::int64_t> gap(30 * 1000, 120 * 1000);

    MonthTruth& mt = truth[month_text];
    for (int p = 0; p < spec.pages_per_month; ++p) {
      User& user = users[pick_user(rng)];
      const int site = pick_site(rng);
      const std::string host = site_hostname(site);
      const bool site_secure = site < secure_sites;
      const bool page_https = secure_share ? site_secure : chance(0.5);
      std::string path;
      if (chance(spec.private_path_share))
        path = "/user/" + user.id + "/home";
      else
        path = "/section" + std::to_string(pick_path(rng)) + "/index.html";

      user.last_time += gap(rng);
      const std::int64_t start = user.last_time;
      const std::string tab =
          std::to_string(user.page_count++ % spec.tabs_per_user);
      std::int64_t clock = start;

      RequestEvent base;
      base.user_id = user.id;
      base.user_country = user.country;
      base.tab_id = tab;

      RequestEvent main = base;
      main.stage = Stage::kBeforeRequest;
      main.request_id = "r" + std::to_string(request_counter++);
      main.timestamp = clock;
      main.url = std::string(page_https ? "https://" : "http://") + host + path;
      main.resource_type = ResourceType::kMainFrame;
      emit(main);

      // One first-party asset per page.
      RequestEvent own = base;
      own.request_id = "r" + std::to_string(request_counter++);
      own.url = std::string(page_https ? "https://" : "http://") + host +
                "/static/app.js";
      own.resource_type = ResourceType::kScript;
      own.timestamp = ++clock;
      emit(own);
      own.stage = Stage::kHeadersReceived;
      own.timestamp = ++clock;
      own.status_code = 200;
      own.content_length = 2048;
      own.server_ip = server_ip(user.country);
      emit(own);

      ++mt.pages;
      mt.sites.insert(site);
      bool all_secure = true;

      for (std::size_t t = 0; t < spec.trackers.size(); ++t) {
        const SyntheticTracker& tracker = spec.trackers[t];
        if (!eligible[t][site] || !chance(tracker.inclusion_probability))
          continue;
        TrackerTruth& tt = mt.trackers[tracker.name];
        ++tt.pages;
        tt.sites.insert(site);

        const bool cookies = chance(tracker.cookie_probability);
        const bool sets_cookie = chance(tracker.set_cookie_probability);
        const bool identifier = chance(tracker.identifier_probability);
        const std::string country = sample_key(tracker.server_countries, rng);
        const std::string ip = server_ip(country);

        std::vector<ResourceType> types;
        for (const auto& [type, prob] : tracker.content_types)
          if (chance(prob))
            for (int r = 0; r < tracker.requests_per_type; ++r)
              types.push_back(*parse_resource_type(type));
        if (types.empty()) types.push_back(ResourceType::kOther);

        for (std::size_t r = 0; r < types.size(); ++r) {
          const std::string tracker_host = replace_all(
              tracker.hostnames[r % tracker.hostnames.size()], "{user}",
              user.token);
          const bool https =
              site_secure || chance(tracker.https_probability);
          if (!https) all_secure = false;

          RequestEvent req = base;
          req.request_id = "r" + std::to_string(request_counter++);
          req.resource_type = types[r];
          req.is_main_frame_context = types[r] != ResourceType::kSubFrame;
          req.method = types[r] == ResourceType::kBeacon ? Method::kPost
                                                         : Method::kGet;
          req.url = std::string(https ? "https://" : "http://") + tracker_host +
                    "/collect?v=1";
          if (identifier && r == 0) req.url += "&uid=" + user.token;
          req.stage = Stage::kBeforeRequest;
          req.timestamp = ++clock;
          req.blocked_by_host_extension = chance(tracker.block_probability);
          emit(req);
          if (req.blocked_by_host_extension) continue;
          req.blocked_by_host_extension = false;

          req.stage = Stage::kBeforeSendHeaders;
          req.timestamp = ++clock;
          req.cookies_sent = cookies && r == 0;
          emit(req);
          req.cookies_sent = false;
          if (chance(tracker.external_block_probability)) continue;

          std::lognormal_distribution<double> length(
              tracker.content_length_mu, tracker.content_length_sigma);
          req.stage = Stage::kHeadersReceived;
          req.timestamp = ++clock;
          req.status_code = 200;
          req.content_length = static_cast<std::int64_t>(std::llround(length(rng)));
          req.from_cache = chance(tracker.cache_probability);
          req.set_cookie = sets_cookie && r == 0;
          req.server_ip = ip;
          emit(req);
        }
      }
      if (all_secure) ++mt.secure_pages;
    }
  }

  // Close every tab after its user's last page.
  for (const auto& user : users) {
    for (int tab = 0; tab < spec.tabs_per_user; ++tab) {
      RequestEvent close;
      close.stage = Stage::kTabClosed;
      close.user_id = user.id;
      close.user_country = user.country;
      close.tab_id = std::to_string(tab);
      close.timestamp = user.last_time + 60 * 1000;
      emit(close);
    }
  }

  std::stable_sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) {
    return a.time != b.time ? a.time < b.time : a.order < b.order;
  });

  GeneratedCorpus out;
  out.events.reserve(timed.size());
  for (auto& t : timed) out.events.push_back(std::move(t.event));

  out.truth["seed"] = spec.seed;
  out.truth["spec"] = to_json(spec);
  ordered_json months = ordered_json::object();
  for (const auto& [month, mt] : truth) {
    ordered_json m;
    m["pages"] = mt.pages;
    m["sites_visited"] = mt.sites.size();
    m["secure_pages"] = mt.secure_pages;
    ordered_json trackers = ordered_json::object();
    for (const auto& tracker : spec.trackers) {
      const auto it = mt.trackers.find(tracker.name);
      trackers[tracker.name] = {
          {"pages", it == mt.trackers.end() ? 0 : it->second.pages},
          {"sites", it == mt.trackers.end() ? 0 : it->second.sites.size()},
          {"inclusion_probability", tracker.inclusion_probability}};
    }
    m["trackers"] = std::move(trackers);
    months[month] = std::move(m);
  }
  out.truth["months"] = std::move(months);
  return out;
}

}  // namespace trackscope
