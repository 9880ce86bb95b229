#include "trackscope/inspect.h"

#include <sstream>

#include "trackscope/error.h"
#include "trackscope/md5_hash.h"
#include "trackscope/report_io.h"

namespace trackscope {
namespace {

using nlohmann::ordered_json;

ordered_json pick(const ordered_json& list, const char* key,
                  std::string_view id) {
  for (const auto& o : list)
    if (o.at(key).get<std::string>() == id) return o;
  return nullptr;
}

}  // namespace

std::string_view entity_kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::kTracker: return "tracker";
    case EntityKind::kSite: return "site";
    case EntityKind::kCompany: return "company";
  }
  return "tracker";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  if (text == "tracker") return EntityKind::kTracker;
  if (text == "site") return EntityKind::kSite;
  if (text == "company") return EntityKind::kCompany;
  return std::nullopt;
}

ordered_json inspect(const AggregateReport& report, EntityKind kind,
                     std::string_view id) {
  const ordered_json full = to_json(report);
  ordered_json entity;
  switch (kind) {
    case EntityKind::kTracker:
      entity = pick(full.at("trackers"), "tracker_id", id);
      break;
    case EntityKind::kCompany:
      entity = pick(full.at("companies"), "company_id", id);
      if (!entity.is_null()) {
        // member trackers with their own reach, so union vs sum is visible
        ordered_json members = ordered_json::array();
        for (const auto& tid : entity.at("trackers")) {
          const auto* t = report.find_tracker(tid.get<std::string>());
          if (!t) continue;
          members.push_back({{"tracker_id", t->tracker_id},
                             {"reach", t->reach},
                             {"site_reach", t->site_reach}});
        }
        entity["member_reach"] = std::move(members);
      }
      break;
    case EntityKind::kSite: {
      entity = pick(full.at("sites"), "hostname_digest", id);
      if (entity.is_null() && !report.sites.empty()) {
        const std::size_t bytes = report.sites.front().hostname_digest.size() / 2;
        entity = pick(full.at("sites"), "hostname_digest",
                      hash_truncated(id, bytes));
      }
      break;
    }
  }
  if (entity.is_null())
    throw Error(ErrorCode::kUnknownEntity,
                std::string(entity_kind_name(kind)) + " '" + std::string(id) +
                    "' not in report " + report.month.to_string());
  ordered_json profile;
  profile["kind"] = entity_kind_name(kind);
  profile["id"] = std::string(id);
  profile["month"] = report.month.to_string();
  profile["corpus_size"] = report.corpus_size;
  profile["profile"] = std::move(entity);
  return profile;
}

std::string render_profile(const ordered_json& profile) {
  std::ostringstream out;
  out << profile.at("kind").get<std::string>() << " "
      << profile.at("id").get<std::string>() << " ("
      << profile.at("month").get<std::string>() << ", "
      << profile.at("corpus_size") << " pages)\n";
  for (const auto& [key, value] : profile.at("profile").items()) {
    out << "  " << key << ": ";
    if (value.is_number_float())
      out << format_double(value.get<double>());
    else if (value.is_string())
      out << value.get<std::string>();
    else
      out << value.dump();
    out << "\n";
  }
  return out.str();
}

}  // namespace trackscope
