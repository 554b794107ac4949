#include "denguecast/calendar.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "denguecast/error.hpp"

namespace denguecast {

namespace {

using std::chrono::day;
using std::chrono::days;
using std::chrono::month;
using std::chrono::sys_days;
using std::chrono::year;

int parse_fixed_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(fmt::format("invalid date '{}'", whole));
  }
  return value;
}

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ParseError(fmt::format("invalid date '{}' (expected YYYY-MM-DD)", text));
  }
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (text[i] < '0' || text[i] > '9') {
      throw ParseError(fmt::format("invalid date '{}' (expected YYYY-MM-DD)", text));
    }
  }
  const int y = parse_fixed_int(text.substr(0, 4), text);
  const int m = parse_fixed_int(text.substr(5, 2), text);
  const int d = parse_fixed_int(text.substr(8, 2), text);
  Date date{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!date.ok()) {
    throw ParseError(fmt::format("invalid date '{}' (no such calendar day)", text));
  }
  return date;
}

std::string format_date(const Date& d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

int day_of_year(const Date& d) {
  const Date jan1{d.year(), month{1}, day{1}};
  return static_cast<int>((sys_days{d} - sys_days{jan1}).count()) + 1;
}

Date add_days(const Date& d, int n) { return Date{sys_days{d} + days{n}}; }

int days_between(const Date& earlier, const Date& later) {
  return static_cast<int>((sys_days{later} - sys_days{earlier}).count());
}

Biweek date_to_biweek(const Date& d) {
  const int doy = day_of_year(d);
  const int index = std::min((doy + 13) / 14, kBiweeksPerYear);
  return {static_cast<int>(d.year()), index};
}

DateInterval biweek_to_interval(const Biweek& b) {
  const Date jan1{year{b.year}, month{1}, day{1}};
  const Date first = add_days(jan1, 14 * (b.index - 1));
  const Date last = b.index == kBiweeksPerYear ? Date{year{b.year}, month{12}, day{31}}
                                                : add_days(jan1, 14 * b.index - 1);
  return {first, last};
}

AbsoluteBiweek to_absolute(const Biweek& b) {
  return {kBiweeksPerYear * (b.year - kEpochYear) + (b.index - 1)};
}

Biweek from_absolute(AbsoluteBiweek a) {
  const int y = floor_div(a.ordinal, kBiweeksPerYear);
  return {kEpochYear + y, a.ordinal - kBiweeksPerYear * y + 1};
}

AbsoluteBiweek absolute_biweek(const Date& d) { return to_absolute(date_to_biweek(d)); }

AbsoluteBiweek analysis_biweek(const Date& analysis_date) {
  return absolute_biweek(add_days(analysis_date, -1));
}

std::string format_biweek(AbsoluteBiweek a) {
  const Biweek b = from_absolute(a);
  return fmt::format("{:04d}-B{:02d}", b.year, b.index);
}

AbsoluteBiweek parse_biweek(std::string_view text) {
  if (text.size() != 8 || text[4] != '-' || text[5] != 'B') {
    throw ParseError(fmt::format("invalid biweek '{}' (expected YYYY-Bnn)", text));
  }
  const int y = parse_fixed_int(text.substr(0, 4), text);
  const int idx = parse_fixed_int(text.substr(6, 2), text);
  if (idx < 1 || idx > kBiweeksPerYear) {
    throw ParseError(fmt::format("invalid biweek '{}' (index out of 1..26)", text));
  }
  return to_absolute({y, idx});
}

std::vector<Date> analysis_dates(const AnalysisSchedule& schedule) {
  std::vector<Date> dates;
  for (int y = schedule.first_year; y <= schedule.last_year; ++y) {
    for (int k = 1; k <= kBiweeksPerYear; ++k) {
      const Biweek b{y, k};
      if (schedule.exclusions.contains(b)) continue;
      dates.push_back(biweek_to_interval(b).first);
    }
  }
  return dates;
}

}  // namespace denguecast
