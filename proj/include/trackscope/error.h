#ifndef TRACKSCOPE_ERROR_H_
#define TRACKSCOPE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace trackscope {

enum class ErrorCode {
  kMalformedUrl,
  kInvalidHostname,
  kSuffixOnly,
  kMalformedIp,
  kStageOrderViolation,
  kParseError,
  kDuplicatePattern,
  kUnknownTracker,
  kEmptyCorpus,
  kEmptySlice,
  kUndefinedRatio,
  kTrackerAbsent,
  kUnknownEntity,
  kSpecError,
  kConfigError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trackscope

#endif  // TRACKSCOPE_ERROR_H_
