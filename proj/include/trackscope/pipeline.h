#ifndef TRACKSCOPE_PIPELINE_H_
#define TRACKSCOPE_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trackscope/aggregator.h"
#include "trackscope/error.h"
#include "trackscope/month.h"
#include "trackscope/quorum.h"
#include "trackscope/request_event.h"
#include "trackscope/sanitizer.h"
#include "trackscope/transport.h"

namespace trackscope {

struct PipelineConfig {
  std::filesystem::path suffix_list;
  std::filesystem::path tracker_db;
  std::filesystem::path cleaning_rules;  // optional
  std::filesystem::path geo_table;
  QuorumConfig quorum;
  std::size_t hash_truncation_bytes = kDefaultDigestBytes;
  TransportConfig transport{.clients = 1, .proxies = 4};
  std::optional<MonthKey> month;  // only this month when set
  std::size_t cardinality_threshold = 100;
  int cardinality_window_days = 7;

  // Shipped data files.
  static PipelineConfig defaults();
  // Keys absent from `j` keep their current values.
  void apply_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  // Throws kConfigError for missing files or bad values.
  void validate() const;
};

// A failure inside one pipeline stage, tagged with the stage and the input
// line when one is known.
class StageError : public Error {
 public:
  StageError(const Error& cause, std::string stage, std::size_t line);

  const std::string& stage() const { return stage_; }
  std::size_t line() const { return line_; }

 private:
  std::string stage_;
  std::size_t line_;
};

struct RunSummary {
  std::size_t events = 0;
  std::size_t dropped_events = 0;
  std::size_t page_loads = 0;
  std::size_t messages = 0;
  std::vector<std::size_t> proxy_message_counts;
  std::vector<std::string> months;
  std::vector<CleaningRule> cleaning_candidates;
  std::vector<AggregateReport> reports;
  std::vector<SanitizedPageLoad> collected;
};

// One quorum store per window index (timestamp / window length), filled from
// every subresource URL with the user as observer.
std::map<std::int64_t, QuorumStore> build_quorum_stores(
    const QuorumConfig& config, const std::vector<EventLogEntry>& events);
std::int64_t quorum_window_of(const QuorumConfig& config, std::int64_t ts);

// probe -> quorum -> sanitize -> transport -> aggregate, in memory.
RunSummary run_pipeline(const PipelineConfig& config,
                        const std::vector<EventLogEntry>& events);

// Reads the event log, runs the pipeline and writes the report files, the
// sanitized corpus, review candidates and a manifest into output_dir.
RunSummary run_pipeline_files(const PipelineConfig& config,
                              const std::filesystem::path& event_log,
                              const std::filesystem::path& output_dir);

// CLI exit status for an error: 2 config, 3 input parse, 4 empty input,
// 1 anything else.
int exit_code_for(ErrorCode code);

}  // namespace trackscope

#endif  // TRACKSCOPE_PIPELINE_H_
