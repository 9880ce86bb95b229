#ifndef TRACKSCOPE_INSPECT_H_
#define TRACKSCOPE_INSPECT_H_

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "trackscope/aggregator.h"

namespace trackscope {

enum class EntityKind { kTracker, kSite, kCompany };

std::string_view entity_kind_name(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

// Profile of one entity in a monthly report. Sites may be given either by
// digest or by plain hostname. Throws kUnknownEntity.
nlohmann::ordered_json inspect(const AggregateReport& report, EntityKind kind,
                               std::string_view id);

// Human-readable rendering of a profile.
std::string render_profile(const nlohmann::ordered_json& profile);

}  // namespace trackscope

#endif  // TRACKSCOPE_INSPECT_H_
