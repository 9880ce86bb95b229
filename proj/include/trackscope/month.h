#ifndef TRACKSCOPE_MONTH_H_
#define TRACKSCOPE_MONTH_H_

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace trackscope {

struct MonthKey {
  int year = 1970;
  int month = 1;  // 1..12

  auto operator<=>(const MonthKey&) const = default;

  bool valid() const { return month >= 1 && month <= 12; }

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
  }

  static MonthKey from_timestamp(std::int64_t ms) {
    using namespace std::chrono;
    const sys_days day = floor<days>(sys_time<milliseconds>(milliseconds(ms)));
    const year_month_day ymd(day);
    return {static_cast<int>(ymd.year()),
            static_cast<int>(static_cast<unsigned>(ymd.month()))};
  }

  // First millisecond of the month.
  std::int64_t start_ms() const {
    using namespace std::chrono;
    const sys_days day =
        year_month_day(std::chrono::year(year),
                       std::chrono::month(static_cast<unsigned>(month)),
                       std::chrono::day(1));
    return duration_cast<milliseconds>(day.time_since_epoch()).count();
  }

  static std::optional<MonthKey> parse(std::string_view text) {
    int y = 0, m = 0;
    char tail = 0;
    if (text.size() != 7 ||
        std::sscanf(std::string(text).c_str(), "%4d-%2d%c", &y, &m, &tail) != 2)
      return std::nullopt;
    MonthKey key{y, m};
    if (!key.valid()) return std::nullopt;
    return key;
  }
};

}  // namespace trackscope

#endif  // TRACKSCOPE_MONTH_H_
