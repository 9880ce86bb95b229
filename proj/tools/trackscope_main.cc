// trackscope command line: generate, run, inspect, simulate-transport,
// db-check, quorum-export.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "trackscope/generator.h"
#include "trackscope/geo_table.h"
#include "trackscope/inspect.h"
#include "trackscope/pipeline.h"
#include "trackscope/report_io.h"
#include "trackscope/tracker_db.h"

namespace ts = trackscope;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ts::Error(ts::ErrorCode::kConfigError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ts::Error(ts::ErrorCode::kConfigError, path + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ts::Error(ts::ErrorCode::kConfigError, "cannot write " + path);
  return out;
}

std::vector<ts::EventLogEntry> read_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ts::Error(ts::ErrorCode::kConfigError, "cannot open " + path);
  return ts::read_event_log(in);
}

// Values for the flags that mirror PipelineConfig. Only flags actually given
// end up in the override object.
struct ConfigFlags {
  std::string config_path;
  std::string suffix_list, tracker_db, cleaning_rules, geo_table, month;
  int quorum_k = 0, quorum_window_days = 0, quorum_min_value_length = 0;
  std::size_t hash_bytes = 0, cardinality_threshold = 0;
  int cardinality_window_days = 0;
  int proxies = 0;
  std::int64_t delay_min_ms = 0, delay_max_ms = 0;
  std::uint64_t seed = 0;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path,
                    "JSON config; its keys override flags (env TRACKSCOPE_CONFIG)");
    options["suffix_list"] = app->add_option("--suffix-list", suffix_list);
    options["tracker_db"] = app->add_option("--tracker-db", tracker_db);
    options["cleaning_rules"] =
        app->add_option("--cleaning-rules", cleaning_rules,
                        "empty string disables cleaning rules");
    options["geo_table"] = app->add_option("--geo-table", geo_table);
    options["month"] = app->add_option("--month", month, "YYYY-MM");
    options["quorum.k"] = app->add_option("--quorum-k", quorum_k);
    options["quorum.window_days"] =
        app->add_option("--quorum-window-days", quorum_window_days);
    options["quorum.min_value_length"] =
        app->add_option("--quorum-min-value-length", quorum_min_value_length);
    options["hash_truncation_bytes"] = app->add_option("--hash-bytes", hash_bytes);
    options["cardinality_threshold"] =
        app->add_option("--cardinality-threshold", cardinality_threshold);
    options["cardinality_window_days"] =
        app->add_option("--cardinality-window-days", cardinality_window_days);
    options["transport.proxies"] = app->add_option("--proxies", proxies);
    options["transport.delay_min_ms"] =
        app->add_option("--delay-min-ms", delay_min_ms);
    options["transport.delay_max_ms"] =
        app->add_option("--delay-max-ms", delay_max_ms);
    options["transport.seed"] = app->add_option("--seed", seed);
  }

  bool given(const std::string& name) const {
    return options.at(name)->count() > 0;
  }

  ts::PipelineConfig build() const {
    json flags = json::object();
    auto set = [&](const std::string& name, const json& value) {
      if (!given(name)) return;
      const auto dot = name.find('.');
      if (dot == std::string::npos)
        flags[name] = value;
      else
        flags[name.substr(0, dot)][name.substr(dot + 1)] = value;
    };
    set("suffix_list", suffix_list);
    set("tracker_db", tracker_db);
    set("cleaning_rules", cleaning_rules);
    set("geo_table", geo_table);
    set("month", month);
    set("quorum.k", quorum_k);
    set("quorum.window_days", quorum_window_days);
    set("quorum.min_value_length", quorum_min_value_length);
    set("hash_truncation_bytes", hash_bytes);
    set("cardinality_threshold", cardinality_threshold);
    set("cardinality_window_days", cardinality_window_days);
    set("transport.proxies", proxies);
    set("transport.delay_min_ms", delay_min_ms);
    set("transport.delay_max_ms", delay_max_ms);
    set("transport.seed", seed);

    ts::PipelineConfig config = ts::PipelineConfig::defaults();
    config.apply_json(flags);
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("TRACKSCOPE_CONFIG")) path = env;
    }
    if (!path.empty()) config.apply_json(read_json_file(path));
    return config;
  }
};

int cmd_generate(const std::string& spec_path, std::optional<std::uint64_t> seed,
                 const std::string& out, std::string truth_path,
                 const std::string& geo_path) {
  ts::SyntheticCorpusSpec spec = ts::corpus_spec_from_json(read_json_file(spec_path));
  if (seed) spec.seed = *seed;
  const ts::GeoTable geo = ts::GeoTable::load(
      geo_path.empty() ? ts::PipelineConfig::defaults().geo_table : std::filesystem::path(geo_path));
  const auto corpus = ts::generate_corpus(spec, geo);
  auto log = open_out(out);
  ts::write_event_log(log, corpus.events);
  if (truth_path.empty()) truth_path = out + ".truth.json";
  open_out(truth_path) << corpus.truth.dump(2) << "\n";
  std::cerr << "wrote " << corpus.events.size() << " events to " << out << "\n";
  return 0;
}

int cmd_run(const ConfigFlags& flags, const std::string& events,
            const std::string& outdir) {
  const ts::PipelineConfig config = flags.build();
  const auto summary = ts::run_pipeline_files(config, events, outdir);
  std::cout << "events " << summary.events << ", page loads "
            << summary.page_loads << ", dropped " << summary.dropped_events
            << ", months";
  for (const auto& m : summary.months) std::cout << " " << m;
  std::cout << "\n";
  return 0;
}

int cmd_inspect(const std::string& report_path, const std::string& kind_text,
                const std::string& id, bool as_json) {
  const auto kind = ts::parse_entity_kind(kind_text);
  if (!kind)
    throw ts::Error(ts::ErrorCode::kConfigError,
                    "kind must be tracker, site or company");
  const auto report = ts::load_report(report_path);
  const auto profile = ts::inspect(report, *kind, id);
  if (as_json)
    std::cout << profile.dump(2) << "\n";
  else
    std::cout << ts::render_profile(profile);
  return 0;
}

int cmd_simulate(const std::string& input, ts::TransportConfig config,
                 std::int64_t interval_ms, const std::string& outdir) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw ts::Error(ts::ErrorCode::kConfigError, "cannot open " + input);
  std::vector<ts::OutgoingMessage> messages;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t i = messages.size();
    messages.push_back({i % static_cast<std::size_t>(config.clients), line,
                        static_cast<std::int64_t>(i) * interval_ms});
  }
  const auto result = ts::run_simulation(config, messages);
  std::filesystem::create_directories(outdir);
  auto proxies = open_out((std::filesystem::path(outdir) / "proxy_logs.ndjson").string());
  ts::write_proxy_logs(proxies, result);
  auto collector =
      open_out((std::filesystem::path(outdir) / "collector_log.ndjson").string());
  ts::write_collector_log(collector, result);
  std::cout << "messages " << messages.size() << ", per proxy";
  for (const auto& log : result.proxy_logs) std::cout << " " << log.size();
  std::cout << ", max share " << ts::format_double(ts::max_proxy_share(result))
            << "\n";
  return 0;
}

int cmd_db_check(const std::string& path, const std::vector<std::string>& hosts) {
  const auto db = ts::TrackerDb::load(
      path.empty() ? ts::default_tracker_db_path() : std::filesystem::path(path));
  std::cout << "ok: " << db.size() << " patterns, version "
            << (db.version().empty() ? "-" : db.version()) << "\n";
  for (const auto& host : hosts) {
    const auto hit = db.match_domain(host);
    std::cout << host << " -> "
              << (hit ? hit->tracker_id + " (" + hit->pattern + ")" : "none")
              << "\n";
  }
  return 0;
}

int cmd_quorum_export(const ConfigFlags& flags, const std::string& events,
                      const std::string& out, std::optional<std::int64_t> window) {
  const ts::PipelineConfig config = flags.build();
  config.quorum.validate();
  const auto stores = ts::build_quorum_stores(config.quorum, read_events(events));
  if (stores.empty())
    throw ts::Error(ts::ErrorCode::kEmptyCorpus, "no subresource requests");
  auto it = window ? stores.find(*window) : std::prev(stores.end());
  if (it == stores.end())
    throw ts::Error(ts::ErrorCode::kConfigError,
                    "no observations in window " + std::to_string(*window));
  auto file = open_out(out);
  it->second.export_csv(file);
  std::cerr << "window " << it->first << ": " << it->second.entry_count()
            << " entries\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trackscope: third-party tracking measurement pipeline"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "synthetic event log from a corpus spec");
  std::string gen_spec, gen_out, gen_truth, gen_geo;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", gen_spec)->required();
  gen->add_option("--seed", gen_seed, "overrides the seed in the corpus file");
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--truth", gen_truth, "default: <out>.truth.json");
  gen->add_option("--geo-table", gen_geo);

  auto* run = app.add_subcommand("run", "probe, sanitize, transport and aggregate a log");
  ConfigFlags run_flags;
  std::string run_events, run_out;
  run->add_option("--events", run_events)->required();
  run->add_option("--out", run_out)->required();
  run_flags.attach(run);

  auto* insp = app.add_subcommand("inspect", "profile one entity from a report");
  std::string insp_report, insp_kind, insp_id;
  bool insp_json = false;
  insp->add_option("--report", insp_report)->required();
  insp->add_option("kind", insp_kind, "tracker, site or company")->required();
  insp->add_option("id", insp_id)->required();
  insp->add_flag("--json", insp_json);

  auto* sim = app.add_subcommand("simulate-transport",
                                 "route one payload per line through the proxies");
  std::string sim_in, sim_out;
  ts::TransportConfig sim_config{.clients = 1, .proxies = 4};
  std::int64_t sim_interval = 1000;
  sim->add_option("--input", sim_in)->required();
  sim->add_option("--out", sim_out)->required();
  sim->add_option("--clients", sim_config.clients);
  sim->add_option("--proxies", sim_config.proxies);
  sim->add_option("--delay-min-ms", sim_config.delay_min_ms);
  sim->add_option("--delay-max-ms", sim_config.delay_max_ms);
  sim->add_option("--seed", sim_config.seed);
  sim->add_option("--interval-ms", sim_interval, "spacing between send times");

  auto* dbc = app.add_subcommand("db-check", "validate a tracker database");
  std::string db_path;
  std::vector<std::string> db_hosts;
  dbc->add_option("--db", db_path);
  dbc->add_option("--match", db_hosts, "hostnames to look up");

  auto* qe = app.add_subcommand("quorum-export", "export one window's quorum store");
  ConfigFlags qe_flags;
  std::string qe_events, qe_out;
  std::optional<std::int64_t> qe_window;
  qe->add_option("--events", qe_events)->required();
  qe->add_option("--out", qe_out)->required();
  qe->add_option("--window", qe_window, "window index, default the latest");
  qe_flags.attach(qe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(gen_spec, gen_seed, gen_out, gen_truth, gen_geo);
    if (*run) return cmd_run(run_flags, run_events, run_out);
    if (*insp) return cmd_inspect(insp_report, insp_kind, insp_id, insp_json);
    if (*sim) {
      sim_config.validate();
      return cmd_simulate(sim_in, sim_config, sim_interval, sim_out);
    }
    if (*dbc) return cmd_db_check(db_path, db_hosts);
    if (*qe) return cmd_quorum_export(qe_flags, qe_events, qe_out, qe_window);
  } catch (const ts::Error& e) {
    std::cerr << "trackscope: " << e.what() << "\n";
    return ts::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "trackscope: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
