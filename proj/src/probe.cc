#include "trackscope/probe.h"

#include <algorithm>

#include "trackscope/error.h"

namespace trackscope {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void add_counts(std::map<std::string, std::int64_t>& into,
                const std::map<std::string, std::int64_t>& from) {
  for (const auto& [key, count] : from) into[key] += count;
}

std::int64_t total(const std::map<std::string, std::int64_t>& counts) {
  std::int64_t sum = 0;
  for (const auto& [key, count] : counts) sum += count;
  return sum;
}

std::map<std::string, std::int64_t> counts_from_json(const json& j,
                                                     const char* key) {
  std::map<std::string, std::int64_t> out;
  if (j.contains(key))
    for (const auto& [k, v] : j.at(key).items()) out[k] = v.get<std::int64_t>();
  return out;
}

}  // namespace

ThirdPartyStats& ThirdPartyStats::operator+=(const ThirdPartyStats& o) {
  count_before_request += o.count_before_request;
  count_headers_received += o.count_headers_received;
  count_blocked += o.count_blocked;
  method_get += o.method_get;
  method_post += o.method_post;
  has_url_data += o.has_url_data;
  scheme_http += o.scheme_http;
  scheme_https += o.scheme_https;
  main_frame += o.main_frame;
  sub_frame += o.sub_frame;
  add_counts(content_types, o.content_types);
  unsafe_identifier += o.unsafe_identifier;
  cookies_sent += o.cookies_sent;
  set_cookie += o.set_cookie;
  add_counts(status_classes, o.status_classes);
  content_length_sum += o.content_length_sum;
  from_cache += o.from_cache;
  add_counts(response_countries, o.response_countries);
  return *this;
}

bool ThirdPartyStats::consistent() const {
  const std::int64_t before = count_before_request;
  if (count_headers_received + count_blocked > before) return false;
  for (std::int64_t c :
       {method_get + method_post, has_url_data, scheme_http + scheme_https,
        main_frame + sub_frame, total(content_types), unsafe_identifier,
        cookies_sent, set_cookie, total(status_classes), from_cache,
        total(response_countries)}) {
    if (c < 0 || c > before) return false;
  }
  return content_length_sum >= 0;
}

std::int64_t external_block_signal(const ThirdPartyStats& tp) {
  return std::max<std::int64_t>(
      0, tp.count_before_request - tp.count_headers_received - tp.count_blocked);
}

std::string status_class(int status_code) {
  if (status_code >= 200 && status_code < 300) return "2xx";
  if (status_code >= 300 && status_code < 400) return "3xx";
  if (status_code >= 400 && status_code < 500) return "4xx";
  if (status_code >= 500 && status_code < 600) return "5xx";
  return "other";
}

ordered_json to_json(const ThirdPartyStats& tp) {
  ordered_json j;
  j["hostname"] = tp.hostname;
  j["count_before_request"] = tp.count_before_request;
  j["count_headers_received"] = tp.count_headers_received;
  j["count_blocked"] = tp.count_blocked;
  j["methods"] = {{"get", tp.method_get}, {"post", tp.method_post}};
  j["has_url_data"] = tp.has_url_data;
  j["scheme_http"] = tp.scheme_http;
  j["scheme_https"] = tp.scheme_https;
  j["main_frame"] = tp.main_frame;
  j["sub_frame"] = tp.sub_frame;
  j["content_types"] = tp.content_types;
  j["unsafe_identifier"] = tp.unsafe_identifier;
  j["cookies_sent"] = tp.cookies_sent;
  j["set_cookie"] = tp.set_cookie;
  j["status_classes"] = tp.status_classes;
  j["content_length_sum"] = tp.content_length_sum;
  j["from_cache"] = tp.from_cache;
  j["response_countries"] = tp.response_countries;
  return j;
}

ThirdPartyStats third_party_from_json(const json& j) {
  ThirdPartyStats tp;
  tp.hostname = j.at("hostname").get<std::string>();
  tp.count_before_request = j.value("count_before_request", std::int64_t{0});
  tp.count_headers_received =
      j.value("count_headers_received", std::int64_t{0});
  tp.count_blocked = j.value("count_blocked", std::int64_t{0});
  if (j.contains("methods")) {
    tp.method_get = j.at("methods").value("get", std::int64_t{0});
    tp.method_post = j.at("methods").value("post", std::int64_t{0});
  }
  tp.has_url_data = j.value("has_url_data", std::int64_t{0});
  tp.scheme_http = j.value("scheme_http", std::int64_t{0});
  tp.scheme_https = j.value("scheme_https", std::int64_t{0});
  tp.main_frame = j.value("main_frame", std::int64_t{0});
  tp.sub_frame = j.value("sub_frame", std::int64_t{0});
  tp.content_types = counts_from_json(j, "content_types");
  tp.unsafe_identifier = j.value("unsafe_identifier", std::int64_t{0});
  tp.cookies_sent = j.value("cookies_sent", std::int64_t{0});
  tp.set_cookie = j.value("set_cookie", std::int64_t{0});
  tp.status_classes = counts_from_json(j, "status_classes");
  tp.content_length_sum = j.value("content_length_sum", std::int64_t{0});
  tp.from_cache = j.value("from_cache", std::int64_t{0});
  tp.response_countries = counts_from_json(j, "response_countries");
  return tp;
}

ordered_json to_json(const PageLoadRecord& page) {
  ordered_json j;
  j["protocol"] = scheme_name(page.protocol);
  j["hostname"] = page.hostname;
  j["path"] = page.path;
  j["started_at"] = page.started_at;
  j["user_country"] = page.user_country;
  j["third_parties"] = ordered_json::array();
  for (const auto& [host, tp] : page.third_parties)
    j["third_parties"].push_back(to_json(tp));
  return j;
}

PageLoadRecord page_load_from_json(const json& j) {
  PageLoadRecord page;
  page.protocol =
      j.at("protocol") == "https" ? Scheme::kHttps : Scheme::kHttp;
  page.hostname = j.at("hostname").get<std::string>();
  page.path = j.at("path").get<std::string>();
  page.started_at = j.value("started_at", std::int64_t{0});
  page.user_country = j.value("user_country", "");
  for (const auto& tp : j.at("third_parties")) {
    auto stats = third_party_from_json(tp);
    page.third_parties[stats.hostname] = std::move(stats);
  }
  return page;
}

OpenPageLoad open_pageload(const RequestEvent& ev, const SuffixList& suffixes) {
  const ParsedUrl url = parse_url(ev.url);
  OpenPageLoad page;
  page.record.protocol =
      url.scheme == Scheme::kHttps ? Scheme::kHttps : Scheme::kHttp;
  page.record.hostname = url.hostname;
  page.record.path = url.path;
  page.record.started_at = ev.timestamp;
  page.record.user_country = ev.user_country;
  page.record.client_id = ev.user_id;
  page.page_domain = registrable_domain(url.hostname, suffixes).value;
  return page;
}

void record_event(OpenPageLoad& page, const RequestEvent& ev,
                  const ProbeContext& ctx) {
  if (ev.stage == Stage::kBeforeRequest) {
    const ParsedUrl url = parse_url(ev.url);
    const std::string domain =
        registrable_domain(url.hostname, ctx.suffixes).value;
    if (domain == page.page_domain) {
      page.requests[ev.request_id] = std::string{};  // first party
      return;
    }
    page.requests[ev.request_id] = url.hostname;

    ThirdPartyStats& tp = page.record.third_parties[url.hostname];
    tp.hostname = url.hostname;
    ++tp.count_before_request;
    if (ev.method == Method::kGet) ++tp.method_get;
    if (ev.method == Method::kPost) ++tp.method_post;
    if (!url.query.empty() || !url.parameter_string.empty()) ++tp.has_url_data;
    if (url.scheme == Scheme::kHttps)
      ++tp.scheme_https;
    else
      ++tp.scheme_http;
    if (ev.is_main_frame_context)
      ++tp.main_frame;
    else
      ++tp.sub_frame;
    ++tp.content_types[std::string(resource_type_name(ev.resource_type))];
    if (classify_request(url, ctx.quorum)) ++tp.unsafe_identifier;
    if (ev.blocked_by_host_extension) {
      ++tp.count_blocked;
      page.blocked_requests.insert(ev.request_id);
    }
    return;
  }

  const auto it = page.requests.find(ev.request_id);
  if (it == page.requests.end())
    throw Error(ErrorCode::kStageOrderViolation,
                std::string(stage_name(ev.stage)) + " for request '" +
                    ev.request_id + "' before before_request");
  if (it->second.empty()) return;  // first party
  ThirdPartyStats& tp = page.record.third_parties[it->second];

  if (ev.stage == Stage::kBeforeSendHeaders) {
    if (ev.cookies_sent) ++tp.cookies_sent;
    return;
  }
  if (ev.stage == Stage::kHeadersReceived) {
    if (page.blocked_requests.contains(ev.request_id))
      throw Error(ErrorCode::kStageOrderViolation,
                  "response for blocked request '" + ev.request_id + "'");
    ++tp.count_headers_received;
    ++tp.status_classes[status_class(ev.status_code)];
    tp.content_length_sum += std::max<std::int64_t>(0, ev.content_length);
    if (ev.from_cache) ++tp.from_cache;
    if (ev.set_cookie) ++tp.set_cookie;
    if (!ev.server_ip.empty())
      ++tp.response_countries[resolve_country(ev.server_ip, ctx.geo)];
    // A request is answered at most once.
    page.requests.erase(it);
  }
}

std::optional<PageLoadRecord> PageLoadAssembler::process(
    const RequestEvent& ev) {
  const TabKey key{ev.user_id, ev.tab_id};
  std::optional<PageLoadRecord> closed;

  if (ev.stage == Stage::kTabClosed) {
    if (auto it = open_.find(key); it != open_.end()) {
      closed = std::move(it->second.record);
      open_.erase(it);
    }
    return closed;
  }

  if (ev.resource_type == ResourceType::kMainFrame) {
    if (ev.stage != Stage::kBeforeRequest) return closed;
    OpenPageLoad next = open_pageload(ev, *suffixes_);
    if (auto it = open_.find(key); it != open_.end()) {
      closed = std::move(it->second.record);
      it->second = std::move(next);
    } else {
      open_.emplace(key, std::move(next));
    }
    return closed;
  }

  const auto it = open_.find(key);
  if (it == open_.end()) {
    ++dropped_events_;
    return closed;
  }
  record_event(it->second, ev, context());
  return closed;
}

std::vector<PageLoadRecord> PageLoadAssembler::flush() {
  std::vector<PageLoadRecord> out;
  out.reserve(open_.size());
  for (auto& [key, page] : open_) out.push_back(std::move(page.record));
  open_.clear();
  return out;
}

}  // namespace trackscope
