#include "trackscope/aggregator.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trackscope/error.h"

namespace trackscope {
namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

template <typename K, typename V>
void add_map(std::map<K, V>& into, const std::map<K, V>& from) {
  for (const auto& [k, v] : from) into[k] += v;
}

std::vector<std::pair<std::string, std::int64_t>> top_n(
    const std::map<std::string, std::int64_t>& counts, std::size_t n) {
  std::vector<std::pair<std::string, std::int64_t>> out(counts.begin(),
                                                        counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (out.size() > n) out.resize(n);
  return out;
}

void require_corpus(Corpus corpus) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no page loads");
}

// Pages on which the tracker appears, with its merged stats.
std::vector<std::pair<const SanitizedPageLoad*, ThirdPartyStats>> tracker_pages(
    Corpus corpus, const TrackerDb& db, std::string_view tracker_id) {
  std::vector<std::pair<const SanitizedPageLoad*, ThirdPartyStats>> out;
  for (const auto& page : corpus) {
    auto on_page = trackers_on_page(page, db);
    if (auto it = on_page.find(std::string(tracker_id)); it != on_page.end())
      out.emplace_back(&page, std::move(it->second.stats));
  }
  return out;
}

// Cheaper than tracker_pages when only presence matters.
std::vector<const SanitizedPageLoad*> pages_with(Corpus corpus, const TrackerDb& db,
                                                 std::string_view tracker_id) {
  std::vector<const SanitizedPageLoad*> out;
  for (const auto& page : corpus) {
    for (const auto& [host, stats] : page.third_parties) {
      const auto* entry = db.match_domain(host);
      if ((entry ? std::string_view(entry->tracker_id) : std::string_view(host)) ==
          tracker_id) {
        out.push_back(&page);
        break;
      }
    }
  }
  return out;
}

constexpr std::size_t kTopEntries = 10;

}  // namespace

TrackerRef resolve_tracker(const TrackerDb& db, std::string_view hostname) {
  if (const auto* entry = db.match_domain(hostname)) {
    return {entry->tracker_id, entry->tracker_name, entry->company_id,
            entry->category, true};
  }
  const std::string host(hostname);
  return {host, host, host, Category::kUnknown, false};
}

std::map<std::string, TrackerOnPage> trackers_on_page(
    const SanitizedPageLoad& page, const TrackerDb& db) {
  std::map<std::string, TrackerOnPage> out;
  for (const auto& [host, stats] : page.third_parties) {
    TrackerRef ref = resolve_tracker(db, host);
    TrackerOnPage& slot = out[ref.tracker_id];
    slot.stats.hostname = ref.tracker_id;
    slot.stats += stats;
    slot.ref = std::move(ref);
  }
  return out;
}

ContextFlags page_context(const ThirdPartyStats& tp) {
  ContextFlags flags;
  flags.cookie = tp.cookies_sent + tp.set_cookie > 0;
  flags.fingerprint = tp.unsafe_identifier > 0;
  flags.tracking = flags.cookie || flags.fingerprint;
  flags.secure = tp.scheme_http == 0;
  flags.blocked = tp.count_blocked + external_block_signal(tp) > 0;
  return flags;
}

const TrackerAggregate* AggregateReport::find_tracker(
    std::string_view id) const {
  for (const auto& t : trackers)
    if (t.tracker_id == id) return &t;
  return nullptr;
}

const SiteAggregate* AggregateReport::find_site(std::string_view digest) const {
  for (const auto& s : sites)
    if (s.hostname_digest == digest) return &s;
  return nullptr;
}

const CompanyAggregate* AggregateReport::find_company(
    std::string_view id) const {
  for (const auto& c : companies)
    if (c.company_id == id) return &c;
  return nullptr;
}

void PartialAggregate::add(const SanitizedPageLoad& page, const TrackerDb& db) {
  ++pages_;
  bool all_secure = true;
  std::int64_t page_bytes = 0;
  std::set<std::string> destinations;
  for (const auto& [host, tp] : page.third_parties) {
    if (tp.scheme_http > 0) all_secure = false;
    page_bytes += tp.content_length_sum;
    for (const auto& [country, count] : tp.response_countries)
      if (count > 0 && country != kUnknownCountry) destinations.insert(country);
  }
  if (all_secure) ++secure_pages_;

  SiteCounts& site = sites_[page.hostname_digest];
  ++site.pages;
  site.content_length += page_bytes;

  bool any_tracking = false;
  std::map<std::string, bool> category_blocked;
  std::set<std::string> page_companies;
  for (const auto& [id, on_page] : trackers_on_page(page, db)) {
    const ThirdPartyStats& tp = on_page.stats;
    TrackerCounts& t = trackers_[id];
    if (t.pages == 0) t.ref = on_page.ref;
    const ContextFlags flags = page_context(tp);
    ++t.pages;
    t.cookie_pages += flags.cookie;
    t.fingerprint_pages += flags.fingerprint;
    t.tracking_pages += flags.tracking;
    t.secure_pages += flags.secure;
    t.blocked_pages += flags.blocked;
    for (const auto& [type, count] : tp.content_types)
      if (count > 0) ++t.content_type_pages[type];
    t.requests += tp.count_before_request;
    t.get_requests += tp.method_get;
    t.post_requests += tp.method_post;
    if (flags.tracking) t.tracking_requests += tp.count_before_request;
    t.content_length += tp.content_length_sum;
    ++t.pages_per_site[page.hostname_digest];

    any_tracking = any_tracking || flags.tracking;
    const std::string category(category_name(t.ref.category));
    category_blocked[category] = category_blocked[category] || flags.blocked;
    page_companies.insert(t.ref.company_id);
    companies_[t.ref.company_id].trackers.insert(id);
    ++site.tracker_pages[id];
    ++site.tracker_sum;
    if (t.ref.in_database) ++site.matched_tracker_sum;
  }
  site.tracking_pages += any_tracking;
  for (const auto& [category, blocked] : category_blocked) {
    ++site.category_pages[category];
    CategoryCounts& c = categories_[category];
    ++c.pages;
    c.blocked_pages += blocked;
  }
  for (const auto& company : page_companies) {
    CompanyCounts& c = companies_[company];
    ++c.pages;
    c.sites.insert(page.hostname_digest);
  }
  if (!page.country.empty()) {
    ++country_pages_[page.country];
    for (const auto& dest : destinations) ++country_cells_[page.country][dest];
  }
}

void PartialAggregate::merge(const PartialAggregate& o) {
  pages_ += o.pages_;
  secure_pages_ += o.secure_pages_;
  for (const auto& [id, src] : o.trackers_) {
    TrackerCounts& t = trackers_[id];
    if (t.pages == 0) t.ref = src.ref;
    t.pages += src.pages;
    t.cookie_pages += src.cookie_pages;
    t.fingerprint_pages += src.fingerprint_pages;
    t.tracking_pages += src.tracking_pages;
    t.secure_pages += src.secure_pages;
    t.blocked_pages += src.blocked_pages;
    add_map(t.content_type_pages, src.content_type_pages);
    t.requests += src.requests;
    t.get_requests += src.get_requests;
    t.post_requests += src.post_requests;
    t.tracking_requests += src.tracking_requests;
    t.content_length += src.content_length;
    add_map(t.pages_per_site, src.pages_per_site);
  }
  for (const auto& [digest, src] : o.sites_) {
    SiteCounts& s = sites_[digest];
    s.pages += src.pages;
    s.tracker_sum += src.tracker_sum;
    s.matched_tracker_sum += src.matched_tracker_sum;
    s.tracking_pages += src.tracking_pages;
    add_map(s.category_pages, src.category_pages);
    s.content_length += src.content_length;
    add_map(s.tracker_pages, src.tracker_pages);
  }
  for (const auto& [id, src] : o.companies_) {
    CompanyCounts& c = companies_[id];
    c.trackers.insert(src.trackers.begin(), src.trackers.end());
    c.pages += src.pages;
    c.sites.insert(src.sites.begin(), src.sites.end());
  }
  for (const auto& [id, src] : o.categories_) {
    categories_[id].pages += src.pages;
    categories_[id].blocked_pages += src.blocked_pages;
  }
  add_map(country_pages_, o.country_pages_);
  for (const auto& [from, row] : o.country_cells_)
    add_map(country_cells_[from], row);
}

AggregateReport PartialAggregate::finalize(const MonthKey& month) const {
  if (pages_ == 0) throw Error(ErrorCode::kEmptyCorpus, "no page loads");
  AggregateReport report;
  report.month = month;
  report.corpus_size = pages_;
  report.distinct_sites = static_cast<std::int64_t>(sites_.size());

  std::map<std::string, std::vector<double>> reach_by_category;
  for (const auto& [id, t] : trackers_) {
    TrackerAggregate a;
    a.tracker_id = id;
    a.tracker_name = t.ref.tracker_name;
    a.company_id = t.ref.company_id;
    a.category = t.ref.category;
    a.in_database = t.ref.in_database;
    a.pages_seen = t.pages;
    a.sites_seen = static_cast<std::int64_t>(t.pages_per_site.size());
    a.reach = ratio(t.pages, pages_);
    a.site_reach = ratio(a.sites_seen, report.distinct_sites);
    a.proportion_cookie_context = ratio(t.cookie_pages, t.pages);
    a.proportion_fingerprint_context = ratio(t.fingerprint_pages, t.pages);
    a.proportion_tracking_context = ratio(t.tracking_pages, t.pages);
    a.proportion_secure_context = ratio(t.secure_pages, t.pages);
    a.proportion_blocked = ratio(t.blocked_pages, t.pages);
    for (const auto& [type, count] : t.content_type_pages)
      a.content_type_page_proportions[type] = ratio(count, t.pages);
    a.method_proportions["get"] = ratio(t.get_requests, t.requests);
    a.method_proportions["post"] = ratio(t.post_requests, t.requests);
    a.mean_requests_per_page = ratio(t.requests, t.pages);
    a.mean_tracking_requests_per_page = ratio(t.tracking_requests, t.pages);
    a.mean_content_length_per_page = ratio(t.content_length, t.pages);
    a.top_sites = top_n(t.pages_per_site, kTopEntries);
    reach_by_category[std::string(category_name(a.category))].push_back(a.reach);
    report.trackers.push_back(std::move(a));
  }
  std::sort(report.trackers.begin(), report.trackers.end(),
            [](const auto& a, const auto& b) {
              return a.pages_seen != b.pages_seen ? a.pages_seen > b.pages_seen
                                                  : a.tracker_id < b.tracker_id;
            });

  double trackers_per_site = 0;
  std::vector<double> site_means_mb;
  for (const auto& [digest, s] : sites_) {
    SiteAggregate a;
    a.hostname_digest = digest;
    a.pages = s.pages;
    a.avg_third_parties_per_page = ratio(s.tracker_sum, s.pages);
    a.proportion_pages_with_tracking = ratio(s.tracking_pages, s.pages);
    for (const auto& [category, count] : s.category_pages)
      a.category_mix[category] = ratio(count, s.pages);
    a.avg_third_party_content_length = ratio(s.content_length, s.pages);
    a.top_trackers = top_n(s.tracker_pages, kTopEntries);
    trackers_per_site += ratio(s.matched_tracker_sum, s.pages);
    site_means_mb.push_back(a.avg_third_party_content_length / kBytesPerMb);
    report.sites.push_back(std::move(a));
  }
  std::sort(report.sites.begin(), report.sites.end(),
            [](const auto& a, const auto& b) {
              return a.pages != b.pages ? a.pages > b.pages
                                        : a.hostname_digest < b.hostname_digest;
            });
  report.mean_trackers_per_site =
      trackers_per_site / static_cast<double>(sites_.size());
  report.content_length = {percentile(site_means_mb, 0.5),
                           percentile(site_means_mb, 0.25),
                           percentile(site_means_mb, 0.75),
                           site_means_mb.size()};

  for (const auto& [id, c] : companies_) {
    CompanyAggregate a;
    a.company_id = id;
    a.trackers.assign(c.trackers.begin(), c.trackers.end());
    a.pages_seen = c.pages;
    a.sites_seen = static_cast<std::int64_t>(c.sites.size());
    a.reach = ratio(c.pages, pages_);
    a.site_reach = ratio(a.sites_seen, report.distinct_sites);
    report.companies.push_back(std::move(a));
  }
  std::sort(report.companies.begin(), report.companies.end(),
            [](const auto& a, const auto& b) {
              return a.pages_seen != b.pages_seen ? a.pages_seen > b.pages_seen
                                                  : a.company_id < b.company_id;
            });

  for (const auto& [from, row] : country_cells_)
    for (const auto& [to, count] : row)
      report.country_matrix[from][to] = ratio(count, country_pages_.at(from));
  for (const auto& [from, count] : country_pages_)
    report.country_matrix.try_emplace(from);

  report.https_series["all_sites"] = ratio(secure_pages_, pages_);
  for (const auto& [category, c] : categories_)
    report.category_block_rates[category] = ratio(c.blocked_pages, c.pages);
  for (const auto& [category, reaches] : reach_by_category) {
    double sum = 0;
    for (double r : reaches) sum += r;
    report.category_mean_reach[category] = sum / reaches.size();
  }
  return report;
}

AggregateReport aggregate_month(Corpus corpus, const TrackerDb& db,
                                const MonthKey& month) {
  require_corpus(corpus);
  PartialAggregate partial;
  for (const auto& page : corpus) partial.add(page, db);
  return partial.finalize(month);
}

double tracker_reach(Corpus corpus, const TrackerDb& db,
                     std::string_view tracker_id) {
  require_corpus(corpus);
  const auto pages = pages_with(corpus, db, tracker_id);
  return ratio(static_cast<std::int64_t>(pages.size()),
               static_cast<std::int64_t>(corpus.size()));
}

double site_reach(Corpus corpus, const TrackerDb& db,
                  std::string_view tracker_id) {
  require_corpus(corpus);
  std::set<std::string> all_sites, with_tracker;
  for (const auto& page : corpus) all_sites.insert(page.hostname_digest);
  for (const auto* page : pages_with(corpus, db, tracker_id))
    with_tracker.insert(page->hostname_digest);
  return ratio(static_cast<std::int64_t>(with_tracker.size()),
               static_cast<std::int64_t>(all_sites.size()));
}

double reach_ratio(Corpus corpus, const TrackerDb& db,
                   std::string_view tracker_id) {
  const double site = site_reach(corpus, db, tracker_id);
  if (site == 0.0)
    throw Error(ErrorCode::kUndefinedRatio,
                "site reach of '" + std::string(tracker_id) + "' is zero");
  return tracker_reach(corpus, db, tracker_id) / site;
}

ContextProportions context_proportions(Corpus corpus, const TrackerDb& db,
                                       std::string_view tracker_id) {
  const auto pages = tracker_pages(corpus, db, tracker_id);
  if (pages.empty())
    throw Error(ErrorCode::kTrackerAbsent, "'" + std::string(tracker_id) + "'");
  std::int64_t cookie = 0, fingerprint = 0, tracking = 0, secure = 0;
  for (const auto& [page, tp] : pages) {
    const ContextFlags flags = page_context(tp);
    cookie += flags.cookie;
    fingerprint += flags.fingerprint;
    tracking += flags.tracking;
    secure += flags.secure;
  }
  const auto n = static_cast<std::int64_t>(pages.size());
  return {ratio(cookie, n), ratio(fingerprint, n), ratio(tracking, n),
          ratio(secure, n)};
}

std::map<std::string, double> content_type_usage(Corpus corpus,
                                                 const TrackerDb& db,
                                                 std::string_view tracker_id) {
  const auto pages = tracker_pages(corpus, db, tracker_id);
  if (pages.empty())
    throw Error(ErrorCode::kTrackerAbsent, "'" + std::string(tracker_id) + "'");
  std::map<std::string, std::int64_t> counts;
  for (ResourceType type : kAllResourceTypes)
    counts[std::string(resource_type_name(type))] = 0;
  for (const auto& [page, tp] : pages)
    for (const auto& [type, count] : tp.content_types)
      if (count > 0) ++counts[type];
  std::map<std::string, double> out;
  const auto n = static_cast<std::int64_t>(pages.size());
  for (const auto& [type, count] : counts) out[type] = ratio(count, n);
  return out;
}

std::map<std::string, double> category_block_rates(Corpus corpus,
                                                   const TrackerDb& db) {
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> counts;
  for (const auto& page : corpus) {
    std::map<std::string, bool> blocked;
    for (const auto& [id, on_page] : trackers_on_page(page, db)) {
      const std::string category(category_name(on_page.ref.category));
      blocked[category] = blocked[category] || page_context(on_page.stats).blocked;
    }
    for (const auto& [category, b] : blocked) {
      ++counts[category].first;
      counts[category].second += b;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [category, c] : counts)
    out[category] = ratio(c.second, c.first);
  return out;
}

double https_adoption(Corpus corpus, const TrackerDb& db,
                      const HttpsSlice& slice) {
  std::int64_t pages = 0, secure = 0;
  if (slice.tracker_id) {
    for (const auto& [page, tp] : tracker_pages(corpus, db, *slice.tracker_id)) {
      ++pages;
      secure += tp.scheme_http == 0;
    }
  } else {
    for (const auto& page : corpus) {
      if (slice.sites && !slice.sites->contains(page.hostname_digest)) continue;
      ++pages;
      secure += std::all_of(
          page.third_parties.begin(), page.third_parties.end(),
          [](const auto& entry) { return entry.second.scheme_http == 0; });
    }
  }
  if (pages == 0) throw Error(ErrorCode::kEmptySlice, "no pages in slice");
  return ratio(secure, pages);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyCorpus, "no values");
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double low = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return low;
  const double high = *std::min_element(values.begin() + lo + 1, values.end());
  return low + frac * (high - low);
}

ContentLengthStats content_length_stats(Corpus corpus) {
  require_corpus(corpus);
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_site;
  for (const auto& page : corpus) {
    auto& [bytes, pages] = per_site[page.hostname_digest];
    ++pages;
    for (const auto& [host, tp] : page.third_parties)
      bytes += tp.content_length_sum;
  }
  std::vector<double> means;
  for (const auto& [site, counts] : per_site)
    means.push_back(ratio(counts.first, counts.second) / kBytesPerMb);
  return {percentile(means, 0.5), percentile(means, 0.25),
          percentile(means, 0.75), means.size()};
}

std::map<std::string, std::map<std::string, double>> country_matrix(
    Corpus corpus) {
  std::map<std::string, std::int64_t> pages;
  std::map<std::string, std::map<std::string, std::int64_t>> cells;
  for (const auto& page : corpus) {
    if (page.country.empty()) continue;
    ++pages[page.country];
    std::set<std::string> destinations;
    for (const auto& [host, tp] : page.third_parties)
      for (const auto& [country, count] : tp.response_countries)
        if (count > 0 && country != kUnknownCountry)
          destinations.insert(country);
    for (const auto& dest : destinations) ++cells[page.country][dest];
  }
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [from, count] : pages) {
    auto& row = out[from];
    for (const auto& [to, n] : cells[from]) row[to] = ratio(n, count);
  }
  return out;
}

}  // namespace trackscope
