#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridsim {

using TimePoint = std::chrono::sys_seconds;

// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace the T). Only whole
// hours are accepted. Times are fixed standard time: no DST transitions.
std::optional<TimePoint> parse_iso_hour(std::string_view text);
std::string format_iso_hour(TimePoint t);

enum class Period { Year, Month, QuarterMonth, Day, Hour };

std::string_view to_string(Period period);
std::optional<Period> parse_period(std::string_view text);

// A contiguous run of hourly timestamps.
class HourlyCalendar {
public:
  HourlyCalendar() = default;
  HourlyCalendar(TimePoint start, std::size_t hours);

  // Throws Error on a malformed start stamp.
  static HourlyCalendar from_iso(std::string_view start, std::size_t hours);

  std::size_t size() const noexcept { return hours_; }
  bool empty() const noexcept { return hours_ == 0; }
  TimePoint start() const noexcept { return start_; }
  TimePoint at(std::size_t t) const { return start_ + std::chrono::hours(t); }
  std::string iso(std::size_t t) const { return format_iso_hour(at(t)); }

  int year(std::size_t t) const;
  unsigned month(std::size_t t) const;  // 1..12
  unsigned day(std::size_t t) const;    // 1..31
  unsigned hour_of_day(std::size_t t) const;
  // Quarter-month split at days 1/8/15/22; the last quarter runs to month end.
  unsigned quarter_month(std::size_t t) const;  // 0..3

  // Integer key identifying the period containing hour t.
  std::int64_t period_key(std::size_t t, Period period) const;

  // Maximal runs [begin, end) of hours sharing a period key, in order.
  std::vector<std::pair<std::size_t, std::size_t>> periods(Period period) const;

  // True when the first and last runs are complete calendar periods.
  bool covers_whole_periods(Period period) const;

  HourlyCalendar slice(std::size_t begin, std::size_t count) const;

  bool operator==(const HourlyCalendar&) const = default;

private:
  TimePoint start_{};
  std::size_t hours_ = 0;
};

}  // namespace gridsim
