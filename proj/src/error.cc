#include "trackscope/error.h"

namespace trackscope {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedUrl: return "MalformedUrl";
    case ErrorCode::kInvalidHostname: return "InvalidHostname";
    case ErrorCode::kSuffixOnly: return "SuffixOnly";
    case ErrorCode::kMalformedIp: return "MalformedIp";
    case ErrorCode::kStageOrderViolation: return "StageOrderViolation";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicatePattern: return "DuplicatePattern";
    case ErrorCode::kUnknownTracker: return "UnknownTracker";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEmptySlice: return "EmptySlice";
    case ErrorCode::kUndefinedRatio: return "UndefinedRatio";
    case ErrorCode::kTrackerAbsent: return "TrackerAbsent";
    case ErrorCode::kUnknownEntity: return "UnknownEntity";
    case ErrorCode::kSpecError: return "SpecError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace trackscope
