#include "trackscope/report_io.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "trackscope/error.h"

namespace trackscope {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json pairs_to_json(
    const std::vector<std::pair<std::string, std::int64_t>>& pairs) {
  ordered_json out = ordered_json::array();
  for (const auto& [name, count] : pairs) out.push_back({name, count});
  return out;
}

std::vector<std::pair<std::string, std::int64_t>> pairs_from_json(
    const json& j) {
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const auto& item : j)
    out.emplace_back(item.at(0).get<std::string>(),
                     item.at(1).get<std::int64_t>());
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::kConfigError, "cannot write " + path.string());
  out << text;
}

template <typename F>
std::string render(F&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

ordered_json to_json(const AggregateReport& r) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["month"] = r.month.to_string();
  j["corpus_size"] = r.corpus_size;
  j["distinct_sites"] = r.distinct_sites;
  j["mean_trackers_per_site"] = r.mean_trackers_per_site;
  j["content_length"] = {{"median_mb", r.content_length.median_mb},
                         {"q1_mb", r.content_length.q1_mb},
                         {"q3_mb", r.content_length.q3_mb},
                         {"sites", r.content_length.sites}};
  j["https_series"] = r.https_series;
  j["category_block_rates"] = r.category_block_rates;
  j["category_mean_reach"] = r.category_mean_reach;
  j["country_matrix"] = r.country_matrix;

  ordered_json trackers = ordered_json::array();
  for (const auto& t : r.trackers) {
    ordered_json o;
    o["tracker_id"] = t.tracker_id;
    o["tracker_name"] = t.tracker_name;
    o["company_id"] = t.company_id;
    o["category"] = category_name(t.category);
    o["in_database"] = t.in_database;
    o["pages_seen"] = t.pages_seen;
    o["sites_seen"] = t.sites_seen;
    o["reach"] = t.reach;
    o["site_reach"] = t.site_reach;
    o["proportion_cookie_context"] = t.proportion_cookie_context;
    o["proportion_fingerprint_context"] = t.proportion_fingerprint_context;
    o["proportion_tracking_context"] = t.proportion_tracking_context;
    o["proportion_secure_context"] = t.proportion_secure_context;
    o["proportion_blocked"] = t.proportion_blocked;
    o["content_type_page_proportions"] = t.content_type_page_proportions;
    o["method_proportions"] = t.method_proportions;
    o["mean_requests_per_page"] = t.mean_requests_per_page;
    o["mean_tracking_requests_per_page"] = t.mean_tracking_requests_per_page;
    o["mean_content_length_per_page"] = t.mean_content_length_per_page;
    o["top_sites"] = pairs_to_json(t.top_sites);
    trackers.push_back(std::move(o));
  }
  j["trackers"] = std::move(trackers);

  ordered_json companies = ordered_json::array();
  for (const auto& c : r.companies) {
    ordered_json o;
    o["company_id"] = c.company_id;
    o["trackers"] = c.trackers;
    o["pages_seen"] = c.pages_seen;
    o["sites_seen"] = c.sites_seen;
    o["reach"] = c.reach;
    o["site_reach"] = c.site_reach;
    companies.push_back(std::move(o));
  }
  j["companies"] = std::move(companies);

  ordered_json sites = ordered_json::array();
  for (const auto& s : r.sites) {
    ordered_json o;
    o["hostname_digest"] = s.hostname_digest;
    o["pages"] = s.pages;
    o["avg_third_parties_per_page"] = s.avg_third_parties_per_page;
    o["proportion_pages_with_tracking"] = s.proportion_pages_with_tracking;
    o["category_mix"] = s.category_mix;
    o["avg_third_party_content_length"] = s.avg_third_party_content_length;
    o["top_trackers"] = pairs_to_json(s.top_trackers);
    sites.push_back(std::move(o));
  }
  j["sites"] = std::move(sites);
  return j;
}

AggregateReport report_from_json(const json& j) {
  try {
    if (j.value("schema", "") != kReportSchema)
      throw Error(ErrorCode::kParseError, "unsupported report schema");
    AggregateReport r;
    const auto month = MonthKey::parse(j.at("month").get<std::string>());
    if (!month) throw Error(ErrorCode::kParseError, "bad report month");
    r.month = *month;
    r.corpus_size = j.at("corpus_size").get<std::int64_t>();
    r.distinct_sites = j.at("distinct_sites").get<std::int64_t>();
    r.mean_trackers_per_site = j.at("mean_trackers_per_site").get<double>();
    const auto& cl = j.at("content_length");
    r.content_length = {cl.at("median_mb").get<double>(),
                        cl.at("q1_mb").get<double>(),
                        cl.at("q3_mb").get<double>(),
                        cl.at("sites").get<std::size_t>()};
    r.https_series = j.at("https_series").get<std::map<std::string, double>>();
    r.category_block_rates =
        j.at("category_block_rates").get<std::map<std::string, double>>();
    r.category_mean_reach =
        j.at("category_mean_reach").get<std::map<std::string, double>>();
    r.country_matrix = j.at("country_matrix")
                           .get<std::map<std::string,
                                         std::map<std::string, double>>>();
    for (const auto& o : j.at("trackers")) {
      TrackerAggregate t;
      t.tracker_id = o.at("tracker_id");
      t.tracker_name = o.at("tracker_name");
      t.company_id = o.at("company_id");
      t.category = parse_category(o.at("category").get<std::string>())
                       .value_or(Category::kUnknown);
      t.in_database = o.at("in_database");
      t.pages_seen = o.at("pages_seen");
      t.sites_seen = o.at("sites_seen");
      t.reach = o.at("reach");
      t.site_reach = o.at("site_reach");
      t.proportion_cookie_context = o.at("proportion_cookie_context");
      t.proportion_fingerprint_context = o.at("proportion_fingerprint_context");
      t.proportion_tracking_context = o.at("proportion_tracking_context");
      t.proportion_secure_context = o.at("proportion_secure_context");
      t.proportion_blocked = o.at("proportion_blocked");
      t.content_type_page_proportions =
          o.at("content_type_page_proportions")
              .get<std::map<std::string, double>>();
      t.method_proportions =
          o.at("method_proportions").get<std::map<std::string, double>>();
      t.mean_requests_per_page = o.at("mean_requests_per_page");
      t.mean_tracking_requests_per_page =
          o.at("mean_tracking_requests_per_page");
      t.mean_content_length_per_page = o.at("mean_content_length_per_page");
      t.top_sites = pairs_from_json(o.at("top_sites"));
      r.trackers.push_back(std::move(t));
    }
    for (const auto& o : j.at("companies")) {
      CompanyAggregate c;
      c.company_id = o.at("company_id");
      c.trackers = o.at("trackers").get<std::vector<std::string>>();
      c.pages_seen = o.at("pages_seen");
      c.sites_seen = o.at("sites_seen");
      c.reach = o.at("reach");
      c.site_reach = o.at("site_reach");
      r.companies.push_back(std::move(c));
    }
    for (const auto& o : j.at("sites")) {
      SiteAggregate s;
      s.hostname_digest = o.at("hostname_digest");
      s.pages = o.at("pages");
      s.avg_third_parties_per_page = o.at("avg_third_parties_per_page");
      s.proportion_pages_with_tracking = o.at("proportion_pages_with_tracking");
      s.category_mix = o.at("category_mix").get<std::map<std::string, double>>();
      s.avg_third_party_content_length = o.at("avg_third_party_content_length");
      s.top_trackers = pairs_from_json(o.at("top_trackers"));
      r.sites.push_back(std::move(s));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("report: ") + e.what());
  }
}

AggregateReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

void write_trackers_csv(std::ostream& out, const AggregateReport& r) {
  out << "tracker_id,company_id,category,pages_seen,sites_seen,reach,"
         "site_reach,cookie,fingerprint,tracking,secure,blocked,"
         "mean_requests_per_page,mean_tracking_requests_per_page\n";
  for (const auto& t : r.trackers) {
    out << t.tracker_id << ',' << t.company_id << ','
        << category_name(t.category) << ',' << t.pages_seen << ','
        << t.sites_seen << ',' << format_double(t.reach) << ','
        << format_double(t.site_reach) << ','
        << format_double(t.proportion_cookie_context) << ','
        << format_double(t.proportion_fingerprint_context) << ','
        << format_double(t.proportion_tracking_context) << ','
        << format_double(t.proportion_secure_context) << ','
        << format_double(t.proportion_blocked) << ','
        << format_double(t.mean_requests_per_page) << ','
        << format_double(t.mean_tracking_requests_per_page) << '\n';
  }
}

void write_sites_csv(std::ostream& out, const AggregateReport& r) {
  out << "hostname_digest,pages,avg_third_parties_per_page,"
         "proportion_pages_with_tracking,avg_third_party_content_length\n";
  for (const auto& s : r.sites) {
    out << s.hostname_digest << ',' << s.pages << ','
        << format_double(s.avg_third_parties_per_page) << ','
        << format_double(s.proportion_pages_with_tracking) << ','
        << format_double(s.avg_third_party_content_length) << '\n';
  }
}

void write_companies_csv(std::ostream& out, const AggregateReport& r) {
  out << "company_id,trackers,pages_seen,sites_seen,reach,site_reach\n";
  for (const auto& c : r.companies) {
    std::string members;
    for (const auto& t : c.trackers) members += (members.empty() ? "" : ";") + t;
    out << c.company_id << ',' << members << ',' << c.pages_seen << ','
        << c.sites_seen << ',' << format_double(c.reach) << ','
        << format_double(c.site_reach) << '\n';
  }
}

void write_country_matrix_csv(std::ostream& out, const AggregateReport& r) {
  std::set<std::string> columns;
  for (const auto& [from, row] : r.country_matrix)
    for (const auto& [to, v] : row) columns.insert(to);
  out << "from";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& [from, row] : r.country_matrix) {
    out << from;
    for (const auto& c : columns) {
      const auto it = row.find(c);
      out << ',' << format_double(it == row.end() ? 0.0 : it->second);
    }
    out << '\n';
  }
}

void write_report_files(const std::filesystem::path& dir,
                        const AggregateReport& report) {
  std::filesystem::create_directories(dir);
  const std::string month = report.month.to_string();
  write_file(dir / ("report-" + month + ".json"), to_json(report).dump(2) + "\n");
  write_file(dir / ("trackers-" + month + ".csv"),
             render([&](std::ostream& o) { write_trackers_csv(o, report); }));
  write_file(dir / ("sites-" + month + ".csv"),
             render([&](std::ostream& o) { write_sites_csv(o, report); }));
  write_file(dir / ("companies-" + month + ".csv"),
             render([&](std::ostream& o) { write_companies_csv(o, report); }));
  write_file(dir / ("country_matrix-" + month + ".csv"),
             render([&](std::ostream& o) { write_country_matrix_csv(o, report); }));
}

}  // namespace trackscope
