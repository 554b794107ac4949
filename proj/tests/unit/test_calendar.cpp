#include <catch_amalgamated.hpp>

#include <random>

#include "denguecast/calendar.hpp"
#include "denguecast/error.hpp"

using namespace denguecast;
using namespace std::chrono;

namespace {

Date ymd(int y, unsigned m, unsigned d) { return year{y} / month{m} / day{d}; }

}  // namespace

TEST_CASE("date_to_biweek examples", "[calendar]") {
  CHECK(date_to_biweek(ymd(2014, 1, 1)) == Biweek{2014, 1});
  CHECK(date_to_biweek(ymd(2014, 1, 14)) == Biweek{2014, 1});
  CHECK(date_to_biweek(ymd(2014, 1, 15)) == Biweek{2014, 2});
  CHECK(date_to_biweek(ymd(2014, 12, 31)) == Biweek{2014, 26});
  CHECK(date_to_biweek(ymd(2016, 12, 31)) == Biweek{2016, 26});
}

TEST_CASE("biweek_to_interval examples", "[calendar]") {
  auto i1 = biweek_to_interval({2014, 1});
  CHECK(i1.first == ymd(2014, 1, 1));
  CHECK(i1.last == ymd(2014, 1, 14));
  auto i26 = biweek_to_interval({2014, 26});
  CHECK(i26.first == ymd(2014, 12, 17));
  CHECK(i26.last == ymd(2014, 12, 31));
  auto leap = biweek_to_interval({2016, 26});
  CHECK(leap.first == ymd(2016, 12, 16));
  CHECK(leap.last == ymd(2016, 12, 31));
}

TEST_CASE("invalid dates are rejected at parse time", "[calendar]") {
  CHECK_THROWS_AS(parse_date("2014-02-30"), ParseError);
  CHECK_THROWS_AS(parse_date("2015-02-29"), ParseError);
  CHECK_THROWS_AS(parse_date("2014-13-01"), ParseError);
  CHECK_THROWS_AS(parse_date("2014-1-01"), ParseError);
  CHECK_THROWS_AS(parse_date("not a date"), ParseError);
  CHECK_THROWS_AS(parse_date(""), ParseError);
  CHECK(parse_date("2016-02-29") == ymd(2016, 2, 29));
  CHECK(format_date(parse_date("2014-03-09")) == "2014-03-09");
}

TEST_CASE("absolute ordinals", "[calendar]") {
  CHECK(to_absolute({1968, 1}).ordinal == 0);
  CHECK(to_absolute({1969, 1}).ordinal == 26);
  CHECK(to_absolute({2014, 3}).ordinal == 26 * (2014 - 1968) + 2);
  for (int o = -100; o < 26 * 70; ++o) {
    const AbsoluteBiweek a{o};
    REQUIRE(to_absolute(from_absolute(a)) == a);
  }
  CHECK(format_biweek(to_absolute({2014, 6})) == "2014-B06");
  CHECK(parse_biweek("2014-B06") == to_absolute({2014, 6}));
  CHECK_THROWS_AS(parse_biweek("2014-B27"), ValidationError);
}

TEST_CASE("consecutive biweeks differ by one ordinal across years", "[calendar][property]") {
  for (int y = 1968; y <= 2030; ++y) {
    for (int i = 1; i <= 26; ++i) {
      const Biweek b{y, i};
      const Biweek next = i < 26 ? Biweek{y, i + 1} : Biweek{y + 1, 1};
      REQUIRE(to_absolute(next).ordinal - to_absolute(b).ordinal == 1);
    }
  }
}

TEST_CASE("intervals tile every year 1968-2030", "[calendar][property]") {
  for (int y = 1968; y <= 2030; ++y) {
    Date expected = ymd(y, 1, 1);
    for (int i = 1; i <= 26; ++i) {
      const auto iv = biweek_to_interval({y, i});
      REQUIRE(iv.first == expected);
      REQUIRE(days_between(iv.first, iv.last) >= 13);
      expected = add_days(iv.last, 1);
    }
    REQUIRE(expected == ymd(y + 1, 1, 1));
  }
}

TEST_CASE("every date lies in the interval of its biweek", "[calendar][property]") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> offset(0, days_between(ymd(1968, 1, 1), ymd(2030, 12, 31)));
  for (int n = 0; n < 10000; ++n) {
    const Date d = add_days(ymd(1968, 1, 1), offset(rng));
    const auto b = date_to_biweek(d);
    REQUIRE(b.index >= 1);
    REQUIRE(b.index <= 26);
    const auto iv = biweek_to_interval(b);
    REQUIRE(days_between(iv.first, d) >= 0);
    REQUIRE(days_between(d, iv.last) >= 0);
    REQUIRE(absolute_biweek(d) == to_absolute(b));
  }
}

TEST_CASE("analysis_dates", "[calendar]") {
  AnalysisSchedule s;
  s.first_year = 2014;
  s.last_year = 2014;
  const auto dates = analysis_dates(s);
  REQUIRE(dates.size() == 26);
  CHECK(dates[0] == ymd(2014, 1, 1));
  CHECK(dates[1] == ymd(2014, 1, 15));
  CHECK(dates[2] == ymd(2014, 1, 29));
  CHECK(dates[25] == ymd(2014, 12, 17));

  s.exclusions.insert({2014, 3});
  const auto excluded = analysis_dates(s);
  CHECK(excluded.size() == 25);
  CHECK(std::find(excluded.begin(), excluded.end(), ymd(2014, 1, 29)) == excluded.end());

  AnalysisSchedule empty;
  empty.first_year = 2015;
  empty.last_year = 2014;
  CHECK(analysis_dates(empty).empty());
}

TEST_CASE("analysis biweek is the one containing the previous day", "[calendar]") {
  CHECK(analysis_biweek(ymd(2014, 1, 15)) == to_absolute({2014, 1}));
  CHECK(analysis_biweek(ymd(2014, 1, 1)) == to_absolute({2013, 26}));
  CHECK(analysis_biweek(ymd(2014, 1, 20)) == to_absolute({2014, 2}));
}
