#pragma once

#include <chrono>
#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace denguecast {

using Date = std::chrono::year_month_day;

/// Number of biweeks in every calendar year.
inline constexpr int kBiweeksPerYear = 26;

/// First year of the absolute biweek axis (ordinal 0 = 1968 biweek 1).
inline constexpr int kEpochYear = 1968;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws ParseError.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);

int day_of_year(const Date& d);
Date add_days(const Date& d, int days);
/// Signed day difference `later - earlier`.
int days_between(const Date& earlier, const Date& later);

/// A 14-day reporting interval within a calendar year. Biweek 26 absorbs the
/// remaining 15 or 16 days of the year.
struct Biweek {
  int year = kEpochYear;
  int index = 1;  // 1..26

  friend auto operator<=>(const Biweek&, const Biweek&) = default;
};

/// Biweeks counted from the 1968 epoch; consecutive biweeks differ by one
/// ordinal across year boundaries.
struct AbsoluteBiweek {
  int ordinal = 0;

  friend auto operator<=>(const AbsoluteBiweek&, const AbsoluteBiweek&) = default;
  AbsoluteBiweek operator+(int n) const { return {ordinal + n}; }
  AbsoluteBiweek operator-(int n) const { return {ordinal - n}; }
  int operator-(AbsoluteBiweek other) const { return ordinal - other.ordinal; }
};

struct DateInterval {
  Date first;
  Date last;  // inclusive
};

Biweek date_to_biweek(const Date& d);
DateInterval biweek_to_interval(const Biweek& b);

AbsoluteBiweek to_absolute(const Biweek& b);
Biweek from_absolute(AbsoluteBiweek a);
AbsoluteBiweek absolute_biweek(const Date& d);

/// Zero-based position of a biweek within its year, in [0, 26).
inline double seasonal_position(AbsoluteBiweek a) {
  return static_cast<double>(from_absolute(a).index - 1);
}

/// The last biweek fully elapsed on `analysis_date`, i.e. the biweek that
/// contains the previous day. Forecast origins and truncation are measured
/// from this biweek.
AbsoluteBiweek analysis_biweek(const Date& analysis_date);

/// Label of the form "2014-B03".
std::string format_biweek(AbsoluteBiweek a);
AbsoluteBiweek parse_biweek(std::string_view text);

struct AnalysisSchedule {
  int first_year = 0;
  int last_year = -1;  // inclusive; last_year < first_year means empty
  std::set<Biweek> exclusions;
};

/// First day of every biweek in the schedule's year range, in order, minus
/// excluded biweeks (weeks without a data delivery in the prior biweek).
std::vector<Date> analysis_dates(const AnalysisSchedule& schedule);

}  // namespace denguecast
