#ifndef TRACKSCOPE_AGGREGATOR_H_
#define TRACKSCOPE_AGGREGATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trackscope/month.h"
#include "trackscope/sanitizer.h"
#include "trackscope/tracker_db.h"

namespace trackscope {

using Corpus = std::span<const SanitizedPageLoad>;

// Who a cleaned third-party hostname belongs to. Hostnames the database
// does not know become their own "unknown" tracker and company.
struct TrackerRef {
  std::string tracker_id;
  std::string tracker_name;
  std::string company_id;
  Category category = Category::kUnknown;
  bool in_database = false;

  bool operator==(const TrackerRef&) const = default;
};

TrackerRef resolve_tracker(const TrackerDb& db, std::string_view hostname);

// All of one tracker's third-party entries on one page, merged.
struct TrackerOnPage {
  TrackerRef ref;
  ThirdPartyStats stats;
};

std::map<std::string, TrackerOnPage> trackers_on_page(
    const SanitizedPageLoad& page, const TrackerDb& db);

struct ContextFlags {
  bool cookie = false;
  bool fingerprint = false;
  bool tracking = false;
  bool secure = false;
  bool blocked = false;
};

ContextFlags page_context(const ThirdPartyStats& tracker_on_page);

struct ContextProportions {
  double cookie = 0;
  double fingerprint = 0;
  double tracking = 0;
  double secure = 0;
};

struct ContentLengthStats {
  double median_mb = 0;
  double q1_mb = 0;
  double q3_mb = 0;
  std::size_t sites = 0;
};

struct TrackerAggregate {
  std::string tracker_id;
  std::string tracker_name;
  std::string company_id;
  Category category = Category::kUnknown;
  bool in_database = false;
  std::int64_t pages_seen = 0;
  std::int64_t sites_seen = 0;
  double reach = 0;
  double site_reach = 0;
  double proportion_cookie_context = 0;
  double proportion_fingerprint_context = 0;
  double proportion_tracking_context = 0;
  double proportion_secure_context = 0;
  double proportion_blocked = 0;
  std::map<std::string, double> content_type_page_proportions;
  std::map<std::string, double> method_proportions;  // share of requests
  double mean_requests_per_page = 0;
  double mean_tracking_requests_per_page = 0;
  double mean_content_length_per_page = 0;  // bytes
  std::vector<std::pair<std::string, std::int64_t>> top_sites;
};

struct SiteAggregate {
  std::string hostname_digest;
  std::int64_t pages = 0;
  double avg_third_parties_per_page = 0;
  double proportion_pages_with_tracking = 0;
  std::map<std::string, double> category_mix;  // share of pages per category
  double avg_third_party_content_length = 0;   // bytes per page
  std::vector<std::pair<std::string, std::int64_t>> top_trackers;
};

struct CompanyAggregate {
  std::string company_id;
  std::vector<std::string> trackers;
  std::int64_t pages_seen = 0;
  std::int64_t sites_seen = 0;
  double reach = 0;
  double site_reach = 0;
};

struct AggregateReport {
  MonthKey month;
  std::int64_t corpus_size = 0;
  std::int64_t distinct_sites = 0;
  std::vector<TrackerAggregate> trackers;
  std::vector<SiteAggregate> sites;
  std::vector<CompanyAggregate> companies;
  std::map<std::string, std::map<std::string, double>> country_matrix;
  std::map<std::string, double> https_series;  // slice name -> adoption
  std::map<std::string, double> category_block_rates;
  std::map<std::string, double> category_mean_reach;
  ContentLengthStats content_length;
  double mean_trackers_per_site = 0;

  const TrackerAggregate* find_tracker(std::string_view id) const;
  const SiteAggregate* find_site(std::string_view digest) const;
  const CompanyAggregate* find_company(std::string_view id) const;
};

// Map-reduce accumulator: add() pages, merge() partials in any grouping,
// finalize() computes the ratios. Every field is a sum or a set union.
class PartialAggregate {
 public:
  void add(const SanitizedPageLoad& page, const TrackerDb& db);
  void merge(const PartialAggregate& other);
  AggregateReport finalize(const MonthKey& month) const;

  std::int64_t pages() const { return pages_; }

  bool operator==(const PartialAggregate&) const = default;

 private:
  struct TrackerCounts {
    TrackerRef ref;
    std::int64_t pages = 0;
    std::int64_t cookie_pages = 0;
    std::int64_t fingerprint_pages = 0;
    std::int64_t tracking_pages = 0;
    std::int64_t secure_pages = 0;
    std::int64_t blocked_pages = 0;
    std::map<std::string, std::int64_t> content_type_pages;
    std::int64_t requests = 0;
    std::int64_t get_requests = 0;
    std::int64_t post_requests = 0;
    std::int64_t tracking_requests = 0;
    std::int64_t content_length = 0;
    std::map<std::string, std::int64_t> pages_per_site;

    bool operator==(const TrackerCounts&) const = default;
  };
  struct SiteCounts {
    std::int64_t pages = 0;
    std::int64_t tracker_sum = 0;
    std::int64_t matched_tracker_sum = 0;
    std::int64_t tracking_pages = 0;
    std::map<std::string, std::int64_t> category_pages;
    std::int64_t content_length = 0;
    std::map<std::string, std::int64_t> tracker_pages;

    bool operator==(const SiteCounts&) const = default;
  };
  struct CompanyCounts {
    std::set<std::string> trackers;
    std::int64_t pages = 0;
    std::set<std::string> sites;

    bool operator==(const CompanyCounts&) const = default;
  };
  struct CategoryCounts {
    std::int64_t pages = 0;
    std::int64_t blocked_pages = 0;

    bool operator==(const CategoryCounts&) const = default;
  };

  std::int64_t pages_ = 0;
  std::int64_t secure_pages_ = 0;
  std::map<std::string, TrackerCounts> trackers_;
  std::map<std::string, SiteCounts> sites_;
  std::map<std::string, CompanyCounts> companies_;
  std::map<std::string, CategoryCounts> categories_;
  std::map<std::string, std::int64_t> country_pages_;
  std::map<std::string, std::map<std::string, std::int64_t>> country_cells_;
};

AggregateReport aggregate_month(Corpus corpus, const TrackerDb& db,
                                const MonthKey& month);

// Single-metric entry points over a corpus.
double tracker_reach(Corpus corpus, const TrackerDb& db,
                     std::string_view tracker_id);
double site_reach(Corpus corpus, const TrackerDb& db,
                  std::string_view tracker_id);
double reach_ratio(Corpus corpus, const TrackerDb& db,
                   std::string_view tracker_id);
ContextProportions context_proportions(Corpus corpus, const TrackerDb& db,
                                       std::string_view tracker_id);
std::map<std::string, double> content_type_usage(Corpus corpus,
                                                 const TrackerDb& db,
                                                 std::string_view tracker_id);
std::map<std::string, double> category_block_rates(Corpus corpus,
                                                   const TrackerDb& db);

// A slice is either a set of first-party digests or one tracker.
struct HttpsSlice {
  std::optional<std::set<std::string>> sites;
  std::optional<std::string> tracker_id;

  static HttpsSlice all_sites() { return {}; }
};

// Sites slice: share of the slice's pages on which every third-party request
// used HTTPS. Tracker slice: share of the tracker's pages on which all of its
// requests used HTTPS. Throws kEmptySlice.
double https_adoption(Corpus corpus, const TrackerDb& db,
                      const HttpsSlice& slice);

ContentLengthStats content_length_stats(Corpus corpus);

std::map<std::string, std::map<std::string, double>> country_matrix(
    Corpus corpus);

// Linear-interpolation percentile (p in [0,1]) of unsorted values.
double percentile(std::vector<double> values, double p);

inline constexpr double kBytesPerMb = 1e6;

}  // namespace trackscope

#endif  // TRACKSCOPE_AGGREGATOR_H_
