#include "trackscope/request_event.h"

#include <array>
#include <utility>

#include "json.hpp"
#include "trackscope/error.h"

namespace trackscope {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<Stage, std::string_view>, 4> kStages{{
    {Stage::kBeforeRequest, "before_request"},
    {Stage::kBeforeSendHeaders, "before_send_headers"},
    {Stage::kHeadersReceived, "headers_received"},
    {Stage::kTabClosed, "tab_closed"},
}};

constexpr std::array<std::pair<ResourceType, std::string_view>, 11> kTypes{{
    {ResourceType::kMainFrame, "main_frame"},
    {ResourceType::kSubFrame, "sub_frame"},
    {ResourceType::kScript, "script"},
    {ResourceType::kImage, "image"},
    {ResourceType::kStylesheet, "stylesheet"},
    {ResourceType::kFont, "font"},
    {ResourceType::kXhr, "xhr"},
    {ResourceType::kBeacon, "beacon"},
    {ResourceType::kPlugin, "plugin"},
    {ResourceType::kMedia, "media"},
    {ResourceType::kOther, "other"},
}};

constexpr std::array<std::pair<Method, std::string_view>, 3> kMethods{{
    {Method::kGet, "GET"},
    {Method::kPost, "POST"},
    {Method::kOther, "other"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>&
                             table,
                         E value) {
  for (const auto& [e, name] : table)
    if (e == value) return name;
  return "other";
}

template <typename E, std::size_t N>
std::optional<E> value_of(
    const std::array<std::pair<E, std::string_view>, N>& table,
    std::string_view name) {
  for (const auto& [e, n] : table)
    if (n == name) return e;
  return std::nullopt;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError,
              "line " + std::to_string(line) + ": " + what);
}

std::string id_field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  fail(line, std::string("field '") + key + "' must be a string or integer");
}

// Fields that belong to exactly one stage.
constexpr std::array<std::pair<std::string_view, Stage>, 7> kStageFields{{
    {"cookies_sent", Stage::kBeforeSendHeaders},
    {"status_code", Stage::kHeadersReceived},
    {"content_length", Stage::kHeadersReceived},
    {"from_cache", Stage::kHeadersReceived},
    {"set_cookie", Stage::kHeadersReceived},
    {"server_ip", Stage::kHeadersReceived},
    {"blocked_by_host_extension", Stage::kBeforeRequest},
}};

}  // namespace

std::string_view stage_name(Stage stage) { return name_of(kStages, stage); }
std::string_view resource_type_name(ResourceType type) {
  return name_of(kTypes, type);
}
std::string_view method_name(Method method) {
  return name_of(kMethods, method);
}
std::optional<Stage> parse_stage(std::string_view name) {
  return value_of(kStages, name);
}
std::optional<ResourceType> parse_resource_type(std::string_view name) {
  return value_of(kTypes, name);
}
std::optional<Method> parse_method(std::string_view name) {
  return value_of(kMethods, name);
}

std::string serialize_event(const RequestEvent& e) {
  json j = json::object();
  j["stage"] = stage_name(e.stage);
  j["user_id"] = e.user_id;
  if (!e.user_country.empty()) j["user_country"] = e.user_country;
  j["tab_id"] = e.tab_id;
  j["timestamp"] = e.timestamp;
  if (e.stage != Stage::kTabClosed) {
    j["request_id"] = e.request_id;
    j["url"] = e.url;
    j["resource_type"] = resource_type_name(e.resource_type);
    j["method"] = method_name(e.method);
    j["is_main_frame_context"] = e.is_main_frame_context;
  }
  switch (e.stage) {
    case Stage::kBeforeRequest:
      j["blocked_by_host_extension"] = e.blocked_by_host_extension;
      break;
    case Stage::kBeforeSendHeaders:
      j["cookies_sent"] = e.cookies_sent;
      break;
    case Stage::kHeadersReceived:
      j["status_code"] = e.status_code;
      j["content_length"] = e.content_length;
      j["from_cache"] = e.from_cache;
      j["set_cookie"] = e.set_cookie;
      j["server_ip"] = e.server_ip;
      break;
    case Stage::kTabClosed:
      break;
  }
  return j.dump();
}

RequestEvent parse_event(std::string_view line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(line_number, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(line_number, "event must be a JSON object");

  RequestEvent e;
  try {
    const auto stage = parse_stage(j.at("stage").get<std::string>());
    if (!stage) fail(line_number, "unknown stage");
    e.stage = *stage;
    for (const auto& [field, owner] : kStageFields) {
      if (j.contains(field) && owner != e.stage)
        fail(line_number, "field '" + std::string(field) +
                              "' is not valid at stage " +
                              std::string(stage_name(e.stage)));
    }
    e.user_id = id_field(j, "user_id", line_number);
    e.user_country = j.value("user_country", "");
    e.tab_id = id_field(j, "tab_id", line_number);
    if (e.tab_id.empty()) fail(line_number, "missing tab_id");
    e.timestamp = j.value("timestamp", std::int64_t{0});
    if (e.stage == Stage::kTabClosed) return e;

    e.request_id = id_field(j, "request_id", line_number);
    e.url = j.at("url").get<std::string>();
    const auto type =
        parse_resource_type(j.value("resource_type", std::string("other")));
    if (!type) fail(line_number, "unknown resource_type");
    e.resource_type = *type;
    const auto method = parse_method(j.value("method", std::string("GET")));
    e.method = method.value_or(Method::kOther);
    e.is_main_frame_context = j.value("is_main_frame_context", true);
    e.cookies_sent = j.value("cookies_sent", false);
    e.status_code = j.value("status_code", 0);
    e.content_length = j.value("content_length", std::int64_t{0});
    if (e.content_length < 0) e.content_length = 0;
    e.from_cache = j.value("from_cache", false);
    e.set_cookie = j.value("set_cookie", false);
    e.server_ip = j.value("server_ip", "");
    e.blocked_by_host_extension = j.value("blocked_by_host_extension", false);
  } catch (const json::exception& ex) {
    fail(line_number, ex.what());
  }
  return e;
}

std::vector<EventLogEntry> read_event_log(std::istream& in) {
  std::vector<EventLogEntry> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (number == 1 && line.find("\"schema\"") != std::string::npos) {
      json header;
      try {
        header = json::parse(line);
      } catch (const json::parse_error&) {
        fail(number, "invalid schema header");
      }
      if (header.value("schema", "") != kRequestEventSchema)
        fail(number, "unsupported schema '" + header.value("schema", "") + "'");
      continue;
    }
    entries.push_back({number, parse_event(line, number)});
  }
  return entries;
}

void write_event_log(std::ostream& out,
                     const std::vector<RequestEvent>& events) {
  out << json{{"schema", kRequestEventSchema}}.dump() << '\n';
  for (const auto& e : events) out << serialize_event(e) << '\n';
}

}  // namespace trackscope
