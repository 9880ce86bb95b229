#include "trackscope/pipeline.h"

#include <fstream>
#include <map>
#include <sstream>

#include "trackscope/geo_table.h"
#include "trackscope/md5_hash.h"
#include "trackscope/probe.h"
#include "trackscope/report_io.h"
#include "trackscope/sanitizer.h"
#include "trackscope/suffix_list.h"
#include "trackscope/tracker_db.h"

namespace trackscope {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::int64_t kMsPerDay = 24LL * 60 * 60 * 1000;
constexpr std::string_view kToolVersion = "1.0.0";

template <typename F>
auto in_stage(const char* stage, std::size_t line, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e, stage, line);
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::kConfigError, "cannot write " + path.string());
  out << text;
}

}  // namespace

static std::string strip_code(const Error& e) {
  std::string text = e.what();
  const std::string prefix = std::string(error_code_name(e.code())) + ": ";
  if (text.rfind(prefix, 0) == 0) text.erase(0, prefix.size());
  return text;
}

StageError::StageError(const Error& cause, std::string stage, std::size_t line)
    : Error(cause.code(),
            "stage " + stage +
                (line > 0 ? ", input line " + std::to_string(line) : "") +
                ": " + strip_code(cause)),
      stage_(std::move(stage)),
      line_(line) {}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig config;
  const auto data = default_suffix_list_path().parent_path();
  config.suffix_list = default_suffix_list_path();
  config.tracker_db = default_tracker_db_path();
  config.cleaning_rules = data / "cleaning_rules.csv";
  config.geo_table = data / "geo_table.csv";
  return config;
}

void PipelineConfig::apply_json(const json& j) {
  try {
    if (j.contains("suffix_list")) suffix_list = j.at("suffix_list").get<std::string>();
    if (j.contains("tracker_db")) tracker_db = j.at("tracker_db").get<std::string>();
    if (j.contains("cleaning_rules"))
      cleaning_rules = j.at("cleaning_rules").get<std::string>();
    if (j.contains("geo_table")) geo_table = j.at("geo_table").get<std::string>();
    if (j.contains("quorum")) {
      const auto& q = j.at("quorum");
      quorum.k = q.value("k", quorum.k);
      quorum.min_value_length = q.value("min_value_length", quorum.min_value_length);
      quorum.window_days = q.value("window_days", quorum.window_days);
    }
    hash_truncation_bytes =
        j.value("hash_truncation_bytes", hash_truncation_bytes);
    if (j.contains("transport")) {
      const auto& t = j.at("transport");
      transport.proxies = t.value("proxies", transport.proxies);
      transport.delay_min_ms = t.value("delay_min_ms", transport.delay_min_ms);
      transport.delay_max_ms = t.value("delay_max_ms", transport.delay_max_ms);
      transport.seed = t.value("seed", transport.seed);
    }
    if (j.contains("month")) {
      if (j.at("month").is_null()) {
        month.reset();
      } else {
        month = MonthKey::parse(j.at("month").get<std::string>());
        if (!month) throw Error(ErrorCode::kConfigError, "bad month");
      }
    }
    cardinality_threshold =
        j.value("cardinality_threshold", cardinality_threshold);
    cardinality_window_days =
        j.value("cardinality_window_days", cardinality_window_days);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
}

ordered_json PipelineConfig::to_json() const {
  ordered_json j;
  j["suffix_list"] = suffix_list.string();
  j["tracker_db"] = tracker_db.string();
  j["cleaning_rules"] = cleaning_rules.string();
  j["geo_table"] = geo_table.string();
  j["quorum"] = {{"k", quorum.k},
                 {"min_value_length", quorum.min_value_length},
                 {"window_days", quorum.window_days}};
  j["hash_truncation_bytes"] = hash_truncation_bytes;
  j["transport"] = {{"proxies", transport.proxies},
                    {"delay_min_ms", transport.delay_min_ms},
                    {"delay_max_ms", transport.delay_max_ms},
                    {"seed", transport.seed}};
  j["month"] = month ? json(month->to_string()) : json(nullptr);
  j["cardinality_threshold"] = cardinality_threshold;
  j["cardinality_window_days"] = cardinality_window_days;
  return j;
}

void PipelineConfig::validate() const {
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (p.empty() || !std::filesystem::exists(p))
      throw Error(ErrorCode::kConfigError,
                  std::string(what) + " not found: '" + p.string() + "'");
  };
  require(suffix_list, "suffix list");
  require(tracker_db, "tracker db");
  require(geo_table, "geo table");
  if (!cleaning_rules.empty()) require(cleaning_rules, "cleaning rules");
  quorum.validate();
  if (hash_truncation_bytes < 1 || hash_truncation_bytes > 16)
    throw Error(ErrorCode::kConfigError,
                "hash_truncation_bytes must be in [1,16]");
  TransportConfig t = transport;
  t.clients = 1;
  t.validate();
}

std::int64_t quorum_window_of(const QuorumConfig& config, std::int64_t ts) {
  const std::int64_t window_ms =
      kMsPerDay * static_cast<std::int64_t>(config.window_days);
  return ts / window_ms;
}

std::map<std::int64_t, QuorumStore> build_quorum_stores(
    const QuorumConfig& config, const std::vector<EventLogEntry>& events) {
  std::map<std::int64_t, QuorumStore> stores;
  for (const auto& [line, ev] : events) {
    if (ev.stage != Stage::kBeforeRequest ||
        ev.resource_type == ResourceType::kMainFrame)
      continue;
    in_stage("quorum", line, [&] {
      const ParsedUrl url = parse_url(ev.url);
      auto [it, inserted] =
          stores.try_emplace(quorum_window_of(config, ev.timestamp), config);
      for (const auto& token : extract_tokens(url, config))
        it->second.observe(token.key, token.value, ev.user_id);
    });
  }
  return stores;
}

RunSummary run_pipeline(const PipelineConfig& config,
                        const std::vector<EventLogEntry>& events) {
  config.validate();
  const SuffixList suffixes = SuffixList::load(config.suffix_list);
  const TrackerDb db = TrackerDb::load(config.tracker_db);
  const GeoTable geo = GeoTable::load(config.geo_table);
  const std::vector<CleaningRule> rules =
      config.cleaning_rules.empty() ? std::vector<CleaningRule>{}
                                    : load_cleaning_rules(config.cleaning_rules);

  RunSummary summary;
  summary.events = events.size();
  if (events.empty())
    throw StageError(Error(ErrorCode::kEmptyCorpus, "event log is empty"),
                     "ingest", 0);

  const auto stores = build_quorum_stores(config.quorum, events);
  auto window_of = [&](std::int64_t ts) {
    return quorum_window_of(config.quorum, ts);
  };

  const QuorumStore empty_store(config.quorum);
  PageLoadAssembler assembler({suffixes, empty_store, geo});
  std::vector<PageLoadRecord> records;
  for (const auto& [line, ev] : events) {
    const auto it = stores.find(window_of(ev.timestamp));
    assembler.set_quorum(it == stores.end() ? empty_store : it->second);
    auto closed = in_stage("probe", line, [&] { return assembler.process(ev); });
    if (closed) records.push_back(std::move(*closed));
  }
  for (auto& record : assembler.flush()) records.push_back(std::move(record));
  summary.dropped_events = assembler.dropped_events();
  summary.page_loads = records.size();

  SubdomainCardinalityMonitor monitor(suffixes, config.cardinality_threshold,
                                      config.cardinality_window_days);
  std::map<std::string, std::size_t> client_index;
  std::vector<OutgoingMessage> messages;
  for (const auto& record : records) {
    const SanitizedPageLoad sanitized = in_stage("sanitize", 0, [&] {
      monitor.add(record);
      return sanitize(record, rules, suffixes, config.hash_truncation_bytes);
    });
    const auto [it, inserted] =
        client_index.try_emplace(record.client_id, client_index.size());
    messages.push_back(
        {it->second, serialize_sanitized(sanitized), record.started_at});
  }
  summary.cleaning_candidates = monitor.candidates();

  TransportConfig transport = config.transport;
  transport.clients = std::max<int>(1, static_cast<int>(client_index.size()));
  const SimulationResult sim = in_stage(
      "transport", 0, [&] { return run_simulation(transport, messages); });
  summary.messages = sim.collector_log.size();
  for (const auto& log : sim.proxy_logs)
    summary.proxy_message_counts.push_back(log.size());

  std::map<std::string, std::vector<SanitizedPageLoad>> by_month;
  for (const auto& entry : sim.collector_log) {
    SanitizedPageLoad page =
        in_stage("collect", 0, [&] { return parse_sanitized(entry.payload); });
    summary.collected.push_back(page);
    if (config.month && page.month != config.month->to_string()) continue;
    by_month[page.month].push_back(std::move(page));
  }
  if (by_month.empty())
    throw StageError(Error(ErrorCode::kEmptyCorpus,
                           "no page loads to aggregate"),
                     "aggregate", 0);

  for (const auto& [month, pages] : by_month) {
    summary.months.push_back(month);
    summary.reports.push_back(in_stage("aggregate", 0, [&] {
      return aggregate_month(pages, db, *MonthKey::parse(month));
    }));
  }
  return summary;
}

RunSummary run_pipeline_files(const PipelineConfig& config,
                              const std::filesystem::path& event_log,
                              const std::filesystem::path& output_dir) {
  std::ifstream in(event_log, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kConfigError,
                "cannot open event log " + event_log.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();
  std::istringstream lines(content);
  const auto events =
      in_stage("ingest", 0, [&] { return read_event_log(lines); });

  RunSummary summary = run_pipeline(config, events);

  std::filesystem::create_directories(output_dir);
  for (const auto& report : summary.reports)
    write_report_files(output_dir, report);

  std::string sanitized;
  for (const auto& page : summary.collected)
    sanitized += serialize_sanitized(page) + "\n";
  write_text(output_dir / "sanitized.ndjson", sanitized);

  std::string https = "month,all_sites\n";
  for (const auto& report : summary.reports)
    https += report.month.to_string() + "," +
             format_double(report.https_series.at("all_sites")) + "\n";
  write_text(output_dir / "https_series.csv", https);

  std::string candidates = "target_domain,action\n";
  for (const auto& rule : summary.cleaning_candidates)
    candidates += rule.target_domain + ",replace\n";
  write_text(output_dir / "cleaning_candidates.csv", candidates);

  const SuffixList suffixes = SuffixList::load(config.suffix_list);
  const TrackerDb db = TrackerDb::load(config.tracker_db);
  ordered_json manifest;
  manifest["tool"] = "trackscope";
  manifest["tool_version"] = kToolVersion;
  manifest["schemas"] = {{"events", kRequestEventSchema},
                         {"sanitized", kSanitizedSchema},
                         {"report", kReportSchema}};
  manifest["inputs"] = {
      {"event_log", event_log.filename().string()},
      {"event_log_md5", hash_truncated(content, 16)},
      {"suffix_list_version", suffixes.source_version()},
      {"tracker_db_version", db.version()},
      {"tracker_db_entries", db.size()}};
  manifest["config"] = config.to_json();
  manifest["counts"] = {{"events", summary.events},
                        {"dropped_events", summary.dropped_events},
                        {"page_loads", summary.page_loads},
                        {"messages", summary.messages},
                        {"proxy_messages", summary.proxy_message_counts},
                        {"cleaning_candidates",
                         summary.cleaning_candidates.size()}};
  manifest["months"] = summary.months;
  write_text(output_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kSpecError:
      return 2;
    case ErrorCode::kParseError:
    case ErrorCode::kMalformedUrl:
    case ErrorCode::kInvalidHostname:
    case ErrorCode::kSuffixOnly:
    case ErrorCode::kMalformedIp:
    case ErrorCode::kStageOrderViolation:
    case ErrorCode::kDuplicatePattern:
      return 3;
    case ErrorCode::kEmptyCorpus:
      return 4;
    default:
      return 1;
  }
}

}  // namespace trackscope
