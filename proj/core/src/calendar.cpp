#include "gridsim/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "gridsim/error.hpp"

namespace gridsim {

namespace {

using namespace std::chrono;

struct Civil {
  int year;
  unsigned month;
  unsigned day;
  unsigned hour;
};

Civil civil(TimePoint t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto hour = static_cast<unsigned>(duration_cast<hours>(t - day_point).count());
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour};
}

unsigned quarter_of_day(unsigned day) { return day >= 22 ? 3 : (day - 1) / 7; }

bool parse_int(std::string_view text, int& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

bool period_start(TimePoint t, Period period) {
  const auto c = civil(t);
  switch (period) {
    case Period::Hour: return true;
    case Period::Day: return c.hour == 0;
    case Period::QuarterMonth: return c.hour == 0 && (c.day == 1 || c.day == 8 || c.day == 15 || c.day == 22);
    case Period::Month: return c.hour == 0 && c.day == 1;
    case Period::Year: return c.hour == 0 && c.day == 1 && c.month == 1;
  }
  return false;
}

}  // namespace

std::optional<TimePoint> parse_iso_hour(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  // YYYY-MM-DDTHH:MM or YYYY-MM-DDTHH:MM:SS
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') return std::nullopt;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d) ||
      !parse_int(text.substr(11, 2), h) || !parse_int(text.substr(14, 2), mi))
    return std::nullopt;
  if (text.size() == 19 && (text[16] != ':' || !parse_int(text.substr(17, 2), s))) return std::nullopt;
  if (mi != 0 || s != 0 || h < 0 || h > 23) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return TimePoint{sys_days{ymd}} + hours{h};
}

std::string format_iso_hour(TimePoint t) {
  const auto c = civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:00", c.year, c.month, c.day, c.hour);
  return buf;
}

std::string_view to_string(Period period) {
  switch (period) {
    case Period::Year: return "yearly";
    case Period::Month: return "monthly";
    case Period::QuarterMonth: return "quarter_monthly";
    case Period::Day: return "daily";
    case Period::Hour: return "hourly";
  }
  return "unknown";
}

std::optional<Period> parse_period(std::string_view text) {
  if (text == "yearly" || text == "year") return Period::Year;
  if (text == "monthly" || text == "month") return Period::Month;
  if (text == "quarter_monthly" || text == "quarter_month") return Period::QuarterMonth;
  if (text == "daily" || text == "day") return Period::Day;
  if (text == "hourly" || text == "hour") return Period::Hour;
  return std::nullopt;
}

HourlyCalendar::HourlyCalendar(TimePoint start, std::size_t hours) : start_(start), hours_(hours) {
  if (floor<std::chrono::hours>(start) != start) throw Error("calendar start must fall on a whole hour");
}

HourlyCalendar HourlyCalendar::from_iso(std::string_view start, std::size_t hours) {
  auto parsed = parse_iso_hour(start);
  if (!parsed) throw Error("malformed timestamp '" + std::string(start) + "'");
  return HourlyCalendar(*parsed, hours);
}

int HourlyCalendar::year(std::size_t t) const { return civil(at(t)).year; }
unsigned HourlyCalendar::month(std::size_t t) const { return civil(at(t)).month; }
unsigned HourlyCalendar::day(std::size_t t) const { return civil(at(t)).day; }
unsigned HourlyCalendar::hour_of_day(std::size_t t) const { return civil(at(t)).hour; }
unsigned HourlyCalendar::quarter_month(std::size_t t) const { return quarter_of_day(civil(at(t)).day); }

std::int64_t HourlyCalendar::period_key(std::size_t t, Period period) const {
  const auto c = civil(at(t));
  const std::int64_t ym = static_cast<std::int64_t>(c.year) * 12 + (c.month - 1);
  switch (period) {
    case Period::Year: return c.year;
    case Period::Month: return ym;
    case Period::QuarterMonth: return ym * 4 + quarter_of_day(c.day);
    case Period::Day: return floor<days>(at(t)).time_since_epoch().count();
    case Period::Hour: return floor<hours>(at(t)).time_since_epoch().count();
  }
  return 0;
}

std::vector<std::pair<std::size_t, std::size_t>> HourlyCalendar::periods(Period period) const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t t = 1; t <= hours_; ++t) {
    if (t == hours_ || period_key(t, period) != period_key(begin, period)) {
      out.emplace_back(begin, t);
      begin = t;
    }
  }
  return out;
}

bool HourlyCalendar::covers_whole_periods(Period period) const {
  if (hours_ == 0) return false;
  return period_start(at(0), period) && period_start(at(hours_), period);
}

HourlyCalendar HourlyCalendar::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > hours_) throw Error("calendar slice out of range");
  return HourlyCalendar(at(begin), count);
}

}  // namespace gridsim
