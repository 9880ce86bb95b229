#ifndef TRACKSCOPE_REPORT_IO_H_
#define TRACKSCOPE_REPORT_IO_H_

#include <filesystem>
#include <ostream>
#include <string>

#include "json.hpp"
#include "trackscope/aggregator.h"

namespace trackscope {

inline constexpr std::string_view kReportSchema = "aggregate-report/v1";

nlohmann::ordered_json to_json(const AggregateReport& report);
AggregateReport report_from_json(const nlohmann::json& j);

AggregateReport load_report(const std::filesystem::path& path);

// Column order is fixed; see README for the schema.
void write_trackers_csv(std::ostream& out, const AggregateReport& report);
void write_sites_csv(std::ostream& out, const AggregateReport& report);
void write_companies_csv(std::ostream& out, const AggregateReport& report);
void write_country_matrix_csv(std::ostream& out, const AggregateReport& report);

// report-YYYY-MM.json plus the four CSV tables, suffixed by month.
void write_report_files(const std::filesystem::path& dir,
                        const AggregateReport& report);

std::string format_double(double value);

}  // namespace trackscope

#endif  // TRACKSCOPE_REPORT_IO_H_
