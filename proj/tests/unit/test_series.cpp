#include <catch_amalgamated.hpp>

#include <random>

#include "denguecast/error.hpp"
#include "denguecast/monotone_cubic.hpp"
#include "denguecast/series.hpp"
#include "oracles.hpp"

using namespace denguecast;
using Catch::Matchers::WithinAbs;

namespace {

Snapshot snapshot_of(const std::vector<CaseRecord>& recs) {
  VersionedStore store;
  store.ingest(recs);
  return store.everything();
}

CaseRecord onset(std::string id, std::string date, Diagnosis dx = Diagnosis::DHF,
                 std::string province = "P01") {
  const Date d = parse_date(date);
  return {std::move(id), std::move(province), d, dx, d};
}

BiweekSeries series_of(std::vector<double> values, AbsoluteBiweek start = {0}) {
  BiweekSeries s{"P01", start, std::move(values), {}};
  s.provenance.assign(s.values.size(), Provenance::Observed);
  return s;
}

std::vector<MonthlyCount> random_months(std::mt19937_64& rng, int first_year, int n) {
  std::uniform_int_distribution<int> size(0, 3);
  std::vector<MonthlyCount> out;
  for (int i = 0; i < n; ++i) {
    const int s = size(rng);
    long long c = 0;
    if (s == 1) c = std::uniform_int_distribution<int>(0, 10)(rng);
    if (s == 2) c = std::uniform_int_distribution<int>(0, 500)(rng);
    if (s == 3) c = std::uniform_int_distribution<int>(0, 20000)(rng);
    out.push_back({"P01", first_year + i / 12, 1 + i % 12, c});
  }
  return out;
}

}  // namespace

TEST_CASE("aggregate_linelist examples", "[series]") {
  const AbsoluteBiweek b1 = to_absolute({2014, 1});
  const std::vector<CaseRecord> recs{onset("a", "2014-01-02"), onset("b", "2014-01-10"),
                                     onset("c", "2014-01-20"),
                                     onset("d", "2014-01-03", Diagnosis::DF)};
  const auto s = aggregate_linelist(snapshot_of(recs), "P01", b1, b1 + 3);
  CHECK(s.values == std::vector<double>{2, 1, 0, 0});
  CHECK(s.start == b1);
  const auto all = aggregate_linelist(snapshot_of(recs), "P01", b1, b1 + 3, std::nullopt);
  CHECK(all.values == std::vector<double>{3, 1, 0, 0});

  VersionedStore store;
  store.ingest(recs);
  const auto empty = aggregate_linelist(store.as_of(parse_date("2013-01-01")), "P01", b1, b1 + 4);
  CHECK(empty.values == std::vector<double>(5, 0.0));

  CHECK_THROWS_AS(aggregate_linelist(snapshot_of(recs), "P99", b1, b1 + 3), ValidationError);
  const std::vector<std::string> names{"P01", "P99"};
  CHECK_THROWS_AS(aggregate_linelist(snapshot_of(recs), names, b1, b1 + 3), ValidationError);
}

TEST_CASE("multi-province aggregation matches per-province aggregation", "[series]") {
  std::vector<CaseRecord> recs;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> day(0, 700), prov(1, 4), dx(0, 2);
  for (int i = 0; i < 2000; ++i) {
    const Date d = add_days(parse_date("2013-01-01"), day(rng));
    recs.push_back({"r" + std::to_string(i), "P0" + std::to_string(prov(rng)), d,
                    static_cast<Diagnosis>(dx(rng)), d});
  }
  const AliasMap aliases{{"P04", "P03"}};
  const auto snap = snapshot_of(recs);
  const AbsoluteBiweek first = to_absolute({2013, 1}), last = to_absolute({2014, 26});
  const std::vector<std::string> names{"P01", "P02", "P03"};
  const auto many = aggregate_linelist(snap, names, first, last, Diagnosis::DHF, aliases);
  for (const auto& p : names) {
    const auto one = aggregate_linelist(snap, p, first, last, Diagnosis::DHF, aliases);
    REQUIRE(many.at(p).values == one.values);
  }
  double merged = 0;
  for (const auto& r : recs) {
    if (r.diagnosis == Diagnosis::DHF && (r.province == "P03" || r.province == "P04")) merged += 1;
  }
  double total = 0;
  for (double v : many.at("P03").values) total += v;
  CHECK(total == merged);
}

TEST_CASE("monotone cubic", "[series]") {
  const MonotoneCubic linear({0, 1, 3, 6}, {0, 2, 6, 12});
  for (double t = 0; t <= 6; t += 0.125) REQUIRE_THAT(linear(t), WithinAbs(2 * t, 1e-12));
  const MonotoneCubic step({0, 1, 2, 3, 4}, {0, 0, 10, 10, 10});
  for (double t = 0; t <= 4; t += 0.01) {
    REQUIRE(step(t) >= -1e-12);
    REQUIRE(step(t) <= 10 + 1e-12);
    REQUIRE(step.derivative(t) >= -1e-12);
  }
  CHECK(step(-5) == 0.0);
  CHECK(step(9) == 10.0);
  CHECK_THROWS_AS(MonotoneCubic({0}, {1}), ValidationError);
  CHECK_THROWS_AS(MonotoneCubic({0, 0}, {1, 2}), ValidationError);
}

TEST_CASE("interpolate_monthly examples", "[series]") {
  std::vector<MonthlyCount> zeros;
  for (int m = 1; m <= 24; ++m) zeros.push_back({"P01", 2000 + (m - 1) / 12, 1 + (m - 1) % 12, 0});
  for (double v : interpolate_monthly(zeros).values) CHECK(v == 0.0);

  const std::vector<MonthlyCount> single{{"P01", 2001, 1, 31}};
  const auto split = interpolate_monthly(single);
  REQUIRE(split.size() == 2);
  CHECK(split.start == to_absolute({2001, 1}));
  CHECK_THAT(split.values[0], WithinAbs(14.0, 1e-9));
  CHECK_THAT(split.values[1], WithinAbs(14.0, 1e-9));

  const std::vector<MonthlyCount> negative{{"P01", 2001, 1, -3}};
  CHECK_THROWS_AS(interpolate_monthly(negative), ValidationError);
  const std::vector<MonthlyCount> gap{{"P01", 2001, 1, 3}, {"P01", 2001, 3, 3}};
  CHECK_THROWS_AS(interpolate_monthly(gap), ValidationError);
}

TEST_CASE("constant monthly counts follow the linear-accrual oracle", "[series]") {
  std::vector<MonthlyCount> months;
  std::vector<double> ends, counts;
  for (int i = 0; i < 10 * 12; ++i) {
    const int y = 2000 + i / 12, m = 1 + i % 12;
    months.push_back({"P01", y, m, 28});
    const Date next = m == 12 ? Date{std::chrono::year{y + 1}, std::chrono::month{1}, std::chrono::day{1}}
                              : Date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m + 1)},
                                     std::chrono::day{1}};
    ends.push_back(days_since_epoch(next));
    counts.push_back(28);
  }
  const double start = days_since_epoch(parse_date("2000-01-01"));
  const auto s = interpolate_monthly(months);
  REQUIRE(s.size() == 260);
  for (std::size_t i = 26; i + 26 < s.size(); ++i) {
    const auto iv = biweek_to_interval(from_absolute(s.start + static_cast<int>(i)));
    const double lo = days_since_epoch(iv.first), hi = days_since_epoch(iv.last) + 1;
    const double expect = oracle::piecewise_linear_cumulative(start, ends, counts, hi) -
                          oracle::piecewise_linear_cumulative(start, ends, counts, lo);
    REQUIRE_THAT(s.values[i], WithinAbs(expect, 0.25));
    // 28 cases a month is about 0.92 a day: 12.9 per 14-day biweek, 14.7 in biweek 26.
    REQUIRE(s.values[i] > 12.0);
    REQUIRE(s.values[i] < 15.5);
  }
}

TEST_CASE("interpolation conserves monthly totals", "[series][property]") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int first_year = 1970 + trial % 30;
    const auto months = random_months(rng, first_year, 12 * (1 + trial % 5));
    const auto curve = cumulative_monthly_curve(months);
    double cum = 0;
    for (std::size_t i = 0; i < months.size(); ++i) {
      cum += static_cast<double>(months[i].count);
      REQUIRE_THAT(curve(curve.knots()[i + 1]), WithinAbs(cum, 1e-9 * std::max(1.0, cum)));
    }
    const auto s = interpolate_monthly(months);
    REQUIRE(s.start == to_absolute({first_year, 1}));
    REQUIRE(s.size() == months.size() / 12 * 26);
    double year_in = 0, year_out = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      REQUIRE(s.values[i] >= 0.0);
      REQUIRE(s.provenance[i] == Provenance::Interpolated);
      year_out += s.values[i];
      if ((i + 1) % 26 == 0) {
        const std::size_t y = i / 26;
        year_in = 0;
        for (std::size_t m = 0; m < 12 * (y + 1); ++m) year_in += static_cast<double>(months[m].count);
        REQUIRE_THAT(year_out, WithinAbs(year_in, 1e-9 * std::max(1.0, year_in)));
      }
    }
  }
}

TEST_CASE("truncate_for_delay examples", "[series]") {
  std::vector<double> v(200);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto s = series_of(v, to_absolute({2006, 1}));
  // An analysis date on the first day of the biweek after the series end
  // makes the last series biweek the analysis biweek.
  const Date d = biweek_to_interval(from_absolute(s.last() + 1)).first;
  REQUIRE(analysis_biweek(d) == s.last());

  const auto same = truncate_for_delay(s, d, 0);
  CHECK(same.values == s.values);
  CHECK(same.start == s.start);

  const auto t6 = truncate_for_delay(s, d, 6);
  CHECK(t6.size() == 194);
  CHECK(t6.last() == analysis_biweek(d) - 6);

  CHECK_THROWS_AS(truncate_for_delay(s, d, 200), ValidationError);
  CHECK_THROWS_AS(truncate_for_delay(s, d, -1), ValidationError);
  const Date later = biweek_to_interval(from_absolute(s.last() + 3)).first;
  CHECK_THROWS_AS(truncate_for_delay(s, later, 6), ValidationError);
}

TEST_CASE("smooth examples", "[series]") {
  const auto s = series_of({0, 3, 6});
  const auto out = smooth(s, 3);
  CHECK_THAT(out.values[0], WithinAbs(1.5, 1e-12));
  CHECK_THAT(out.values[1], WithinAbs(3.0, 1e-12));
  CHECK_THAT(out.values[2], WithinAbs(4.5, 1e-12));
  CHECK(out.provenance[1] == Provenance::Smoothed);
  CHECK(smooth(series_of({5, 5, 5, 5}), 3).values == std::vector<double>(4, 5.0));
  CHECK(smooth(s, 1).values == s.values);
  CHECK_THROWS_AS(smooth(s, 2), ValidationError);
  CHECK_THROWS_AS(smooth(s, 0), ValidationError);
}

TEST_CASE("smoothing keeps values non-negative and mass near the input", "[series][property]") {
  std::mt19937_64 rng(9);
  std::poisson_distribution<int> pois(20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(3 + trial % 50);
    for (auto& x : v) x = pois(rng);
    const auto out = smooth(series_of(v), 3);
    double in_sum = 0, out_sum = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      REQUIRE(out.values[i] >= 0);
      in_sum += v[i];
      out_sum += out.values[i];
    }
    // Each edge value weighs 1/2 + 1/3 instead of 1, its neighbour 1/2 + 2/3.
    const double bound = (v.front() + v.back()) / 6 + (v[1] + v[v.size() - 2]) / 6;
    REQUIRE(std::abs(out_sum - in_sum) <= bound + 1e-9);
  }
}

TEST_CASE("merge prefers the line list", "[series]") {
  const auto monthly = series_of({1, 1, 1, 1}, {10});
  const auto linelist = series_of({5, 5, 5}, {12});
  const auto m = merge_sources(monthly, linelist);
  CHECK(m.start == AbsoluteBiweek{10});
  CHECK(m.values == std::vector<double>{1, 1, 5, 5, 5});
  const auto gap = merge_sources(series_of({1}, {0}), series_of({2}, {3}));
  CHECK(gap.values == std::vector<double>{1, 0, 0, 2});
  CHECK(gap.provenance[1] == Provenance::Missing);
}

TEST_CASE("series text round-trip", "[series]") {
  SeriesMap map;
  map["P01"] = series_of({1.5, 0, 3}, to_absolute({2013, 25}));
  map["P01"].provenance[1] = Provenance::Interpolated;
  map["P02"] = series_of({7}, to_absolute({2014, 1}));
  map["P02"].province = "P02";
  const auto text = write_series(map);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  CHECK(lines[0] == kSeriesHeader);
  CHECK(lines[1] == "P01,2013,25,1.5,observed");
  const auto back = parse_series(lines);
  CHECK(back.at("P01").values == map["P01"].values);
  CHECK(back.at("P01").provenance == map["P01"].provenance);
  CHECK(back.at("P01").start == map["P01"].start);
  CHECK(back.at("P02").values == map["P02"].values);
}
