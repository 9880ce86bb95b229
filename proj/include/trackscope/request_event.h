#ifndef TRACKSCOPE_REQUEST_EVENT_H_
#define TRACKSCOPE_REQUEST_EVENT_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace trackscope {

// The three observed webRequest stages plus a synthetic tab-close signal
// needed when replaying logs.
enum class Stage {
  kBeforeRequest,
  kBeforeSendHeaders,
  kHeadersReceived,
  kTabClosed,
};

enum class ResourceType {
  kMainFrame,
  kSubFrame,
  kScript,
  kImage,
  kStylesheet,
  kFont,
  kXhr,
  kBeacon,
  kPlugin,
  kMedia,
  kOther,
};

enum class Method { kGet, kPost, kOther };

inline constexpr std::string_view kRequestEventSchema = "request-event/v1";

std::string_view stage_name(Stage stage);
std::string_view resource_type_name(ResourceType type);
std::string_view method_name(Method method);
std::optional<Stage> parse_stage(std::string_view name);
std::optional<ResourceType> parse_resource_type(std::string_view name);
std::optional<Method> parse_method(std::string_view name);

inline constexpr ResourceType kAllResourceTypes[] = {
    ResourceType::kMainFrame, ResourceType::kSubFrame, ResourceType::kScript,
    ResourceType::kImage,     ResourceType::kStylesheet, ResourceType::kFont,
    ResourceType::kXhr,       ResourceType::kBeacon,  ResourceType::kPlugin,
    ResourceType::kMedia,     ResourceType::kOther,
};

// One browser request observed at one lifecycle stage. Response fields are
// only meaningful at kHeadersReceived, cookies_sent only at
// kBeforeSendHeaders and blocked_by_host_extension only at kBeforeRequest.
//
// user_id and user_country are not browser fields: the replay needs the
// observing client for quorum counting and the client's country for the
// regional matrix.
struct RequestEvent {
  Stage stage = Stage::kBeforeRequest;
  std::string user_id;
  std::string user_country;
  std::string tab_id;
  std::string request_id;
  std::int64_t timestamp = 0;  // ms since epoch
  std::string url;
  ResourceType resource_type = ResourceType::kOther;
  Method method = Method::kGet;
  bool is_main_frame_context = true;
  bool cookies_sent = false;
  int status_code = 0;
  std::int64_t content_length = 0;
  bool from_cache = false;
  bool set_cookie = false;
  std::string server_ip;
  bool blocked_by_host_extension = false;

  bool operator==(const RequestEvent&) const = default;
};

// Newline-delimited JSON, one event per line. An optional first line
// {"schema":"request-event/v1"} pins the version.
std::string serialize_event(const RequestEvent& event);
RequestEvent parse_event(std::string_view line, std::size_t line_number = 0);

struct EventLogEntry {
  std::size_t line_number = 0;
  RequestEvent event;
};

std::vector<EventLogEntry> read_event_log(std::istream& in);
void write_event_log(std::ostream& out, const std::vector<RequestEvent>& events);

}  // namespace trackscope

#endif  // TRACKSCOPE_REQUEST_EVENT_H_
