#ifndef TRACKSCOPE_PROBE_H_
#define TRACKSCOPE_PROBE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "trackscope/geo_table.h"
#include "trackscope/quorum.h"
#include "trackscope/request_event.h"
#include "trackscope/suffix_list.h"
#include "trackscope/url.h"

namespace trackscope {

// Counter bundle for one third-party hostname within one page load.
struct ThirdPartyStats {
  std::string hostname;
  std::int64_t count_before_request = 0;
  std::int64_t count_headers_received = 0;
  std::int64_t count_blocked = 0;
  std::int64_t method_get = 0;
  std::int64_t method_post = 0;
  std::int64_t has_url_data = 0;
  std::int64_t scheme_http = 0;
  std::int64_t scheme_https = 0;
  std::int64_t main_frame = 0;
  std::int64_t sub_frame = 0;
  std::map<std::string, std::int64_t> content_types;
  std::int64_t unsafe_identifier = 0;
  std::int64_t cookies_sent = 0;
  std::int64_t set_cookie = 0;
  std::map<std::string, std::int64_t> status_classes;
  std::int64_t content_length_sum = 0;
  std::int64_t from_cache = 0;
  std::map<std::string, std::int64_t> response_countries;

  // Counter-wise addition; the hostname is left untouched.
  ThirdPartyStats& operator+=(const ThirdPartyStats& other);
  bool operator==(const ThirdPartyStats&) const = default;

  // Checks the counter invariants (received + blocked <= before, every
  // per-request counter <= before, non-negative byte count).
  bool consistent() const;
};

// Requests seen at before_request that never reached headers_received and
// were not blocked by the host extension: evidence of blocking elsewhere.
std::int64_t external_block_signal(const ThirdPartyStats& tp);

std::string status_class(int status_code);

nlohmann::ordered_json to_json(const ThirdPartyStats& tp);
ThirdPartyStats third_party_from_json(const nlohmann::json& j);

// One main-frame navigation and everything it pulled in.
struct PageLoadRecord {
  Scheme protocol = Scheme::kHttp;
  std::string hostname;
  std::string path;
  std::int64_t started_at = 0;
  std::string user_country;  // client annotation for the regional matrix
  std::string client_id;     // observing client; never serialized
  std::map<std::string, ThirdPartyStats> third_parties;  // by hostname

  bool operator==(const PageLoadRecord&) const = default;
};

nlohmann::ordered_json to_json(const PageLoadRecord& page);
PageLoadRecord page_load_from_json(const nlohmann::json& j);

struct ProbeContext {
  const SuffixList& suffixes;
  const QuorumStore& quorum;
  const GeoTable& geo;
};

// A page load that is still collecting events, plus the per-request state
// needed to check stage ordering.
struct OpenPageLoad {
  PageLoadRecord record;
  std::string page_domain;  // TLD+1 of record.hostname
  std::map<std::string, std::string> requests;  // request_id -> hostname
  std::set<std::string> blocked_requests;
};

// Starts a page load from a main_frame before_request event.
OpenPageLoad open_pageload(const RequestEvent& ev, const SuffixList& suffixes);

// Folds one non-main-frame event into the page. Throws
// kStageOrderViolation when a later stage arrives for an unknown request.
void record_event(OpenPageLoad& page, const RequestEvent& ev,
                  const ProbeContext& ctx);

// Replays an event stream, partitioning it into page loads per (user, tab).
class PageLoadAssembler {
 public:
  explicit PageLoadAssembler(ProbeContext ctx)
      : suffixes_(&ctx.suffixes), quorum_(&ctx.quorum), geo_(&ctx.geo) {}

  // Quorum stores are per window; the caller swaps them as time advances.
  void set_quorum(const QuorumStore& quorum) { quorum_ = &quorum; }

  // Returns any page load closed by this event.
  std::optional<PageLoadRecord> process(const RequestEvent& ev);

  // Closes every open page, ordered by (user, tab).
  std::vector<PageLoadRecord> flush();

  std::size_t dropped_events() const { return dropped_events_; }
  std::size_t open_pages() const { return open_.size(); }

 private:
  using TabKey = std::pair<std::string, std::string>;

  ProbeContext context() const { return {*suffixes_, *quorum_, *geo_}; }

  const SuffixList* suffixes_;
  const QuorumStore* quorum_;
  const GeoTable* geo_;
  std::map<TabKey, OpenPageLoad> open_;
  std::size_t dropped_events_ = 0;
};

}  // namespace trackscope

#endif  // TRACKSCOPE_PROBE_H_
