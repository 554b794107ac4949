#include <catch_amalgamated.hpp>

#include <algorithm>
#include <limits>
#include <random>

#include "denguecast/error.hpp"
#include "denguecast/evaluation.hpp"
#include "oracles.hpp"

using namespace denguecast;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScoreRow row(std::string province, int horizon, double predicted, double observed,
             double baseline = 0.0, double lower = 0.0, double upper = 0.0) {
  ScoreRow r;
  r.province = std::move(province);
  r.analysis_date = parse_date("2014-01-29");
  r.origin = to_absolute({2013, 23});
  r.horizon = horizon;
  r.absolute_horizon = horizon;
  r.target = r.origin + horizon;
  r.predicted = predicted;
  r.observed = observed;
  r.baseline = baseline;
  r.lower = lower;
  r.upper = upper;
  return r;
}

BiweekSeries history(AbsoluteBiweek start, std::vector<double> values) {
  BiweekSeries s;
  s.province = "A";
  s.start = start;
  s.values = std::move(values);
  s.provenance.assign(s.values.size(), Provenance::Observed);
  return s;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("seasonal baseline examples", "[evaluation]") {
  const AbsoluteBiweek target = to_absolute({2014, 5});
  std::vector<double> v(10 * 26 + 4, 12.0);
  CHECK(seasonal_baseline(history(to_absolute({2004, 1}), v), target) == 12.0);

  // {2, 4, 6, 8} at biweek 5 of 2010..2013, other biweeks large.
  std::vector<double> four(4 * 26, 100.0);
  four[4] = 2;
  four[30] = 4;
  four[56] = 6;
  four[82] = 8;
  CHECK(seasonal_baseline(history(to_absolute({2010, 1}), four), target) == 5.0);

  std::vector<double> three(3 * 26, 0.0);
  three[4] = 9;
  three[30] = 1;
  three[56] = 3;
  CHECK(seasonal_baseline(history(to_absolute({2011, 1}), three), target) == 3.0);

  // Values older than the window are ignored.
  std::vector<double> old(12 * 26, 1.0);
  old[4] = old[30] = 1000.0;  // 2002 and 2003, outside a 10-year window
  CHECK(seasonal_baseline(history(to_absolute({2002, 1}), old), target) == 1.0);
  CHECK(seasonal_baseline(history(to_absolute({2002, 1}), old), target, 12) == 1.0);
  CHECK(seasonal_baseline(history(to_absolute({2002, 1}), old), target, 2) == 1.0);

  CHECK_THROWS_AS(seasonal_baseline(history(to_absolute({2013, 6}), std::vector<double>(30, 1.0)), target),
                  ValidationError);
  CHECK_THROWS_AS(seasonal_baseline(history(to_absolute({2010, 1}), four), target, 0), ValidationError);
}

TEST_CASE("MAE and relative MAE examples", "[evaluation]") {
  std::vector<ScoreRow> rows{row("A", 1, 10, 9, 7), row("A", 1, 5, 8, 10)};
  CHECK(mae(rows) == 2.0);
  CHECK(baseline_mae(rows) == 2.0);
  CHECK(rel_mae(rows).value == 1.0);
  CHECK(rel_mae(rows).defined);

  std::vector<ScoreRow> perfect{row("A", 1, 3, 3, 4), row("A", 2, 0, 0, 1)};
  CHECK(mae(perfect) == 0.0);
  CHECK(rel_mae(perfect).value == 0.0);

  const std::vector<double> p{1, 2, 3}, o{2, 2, 5};
  CHECK(mae(p, o) == 1.0);
  CHECK_THROWS_AS(mae(std::span<const double>(p), std::span<const double>(o).first(2)), ValidationError);
  CHECK_THROWS_AS(mae(std::span<const ScoreRow>{}), ValidationError);

  const auto undefined = rel_mae(1.0, 0.0);
  CHECK_FALSE(undefined.defined);
  CHECK(std::isnan(undefined.value));
  CHECK(rel_mae(0.0, 0.0).defined == false);
}

TEST_CASE("relative MAE of a model against itself is one", "[evaluation][property]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoreRow> rows;
    for (int i = 0; i < 1 + trial % 13; ++i) {
      const double p = u(rng);
      rows.push_back(row("A", 1, p, u(rng), p));
    }
    const auto r = rel_mae(rows);
    if (r.defined) REQUIRE(r.value == 1.0);
  }
}

TEST_CASE("coverage examples", "[evaluation]") {
  std::vector<ScoreRow> rows{row("A", 1, 5, 5, 0, 4, 6), row("A", 1, 5, 4, 0, 4, 6),
                             row("A", 1, 5, 6, 0, 4, 6), row("A", 1, 5, 7, 0, 4, 6)};
  CHECK(coverage(rows) == 0.75);
  rows.pop_back();
  CHECK(coverage(rows) == 1.0);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ScoreRow> wide{row("A", 1, 1, 1e300, 0, -inf, inf), row("A", 1, 1, 0, 0, -inf, inf)};
  CHECK(coverage(wide) == 1.0);
  std::vector<ScoreRow> point{row("A", 1, 3, 3, 0, 3, 3), row("A", 1, 0, 0, 0, 0, 0)};
  CHECK(coverage(point) == 1.0);
  CHECK_THROWS_AS(coverage(std::span<const ScoreRow>{}), ValidationError);
}

TEST_CASE("rank correlation agrees with the oracle", "[evaluation]") {
  std::mt19937_64 rng(9);
  std::poisson_distribution<int> pois(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoreRow> rows;
    std::vector<double> p, o;
    for (int i = 0; i < 40; ++i) {
      p.push_back(pois(rng));
      o.push_back(p.back() + pois(rng));
      rows.push_back(row("A", 1, p.back(), o.back()));
    }
    REQUIRE_THAT(rank_correlation(rows), WithinAbs(oracle::spearman(p, o), 1e-12));
  }
  CHECK_THROWS_AS(rank_correlation(std::span<const ScoreRow>{}), ValidationError);
}

TEST_CASE("horizon summary examples", "[evaluation]") {
  SECTION("one province gives equal quantiles") {
    std::vector<ScoreRow> rows{row("A", 1, 10, 8, 4), row("A", 1, 2, 3, 1)};
    const auto s = horizon_summary(rows);
    REQUIRE(s.size() == 1);
    CHECK(s[0].n == 2);
    CHECK(s[0].provinces == 1);
    for (double q : s[0].relmae_quantiles) CHECK(q == 1.5 / 3.0);
    CHECK(s[0].mae == 1.5);
  }
  SECTION("median of province relative MAEs") {
    std::vector<ScoreRow> rows{row("A", 2, 1, 0, 2), row("B", 2, 2, 0, 2), row("C", 2, 3, 0, 2)};
    const auto s = horizon_summary(rows);
    REQUIRE(s.size() == 1);
    CHECK(s[0].horizon == 2);
    CHECK(s[0].relmae_quantiles[2] == 1.0);
    CHECK(s[0].relmae_quantiles[0] == 0.55);
  }
  SECTION("undefined provinces are excluded and counted") {
    std::vector<ScoreRow> rows{row("A", 1, 1, 0, 2), row("B", 1, 2, 5, 5)};
    const auto s = horizon_summary(rows);
    CHECK(s[0].provinces == 1);
    CHECK(s[0].excluded == 1);
    CHECK(s[0].relmae_quantiles[2] == 0.5);
    const auto text = write_horizon_summary(s);
    CHECK(lines_of(text)[0] ==
          "horizon,n,spearman_rho,coverage_95,mae,relmae_q05,relmae_q25,relmae_q50,relmae_q75,"
          "relmae_q95,provinces,excluded");
  }
  SECTION("all undefined gives NA") {
    std::vector<ScoreRow> rows{row("A", 1, 1, 2, 2), row("B", 1, 2, 5, 5)};
    const auto s = horizon_summary(rows);
    CHECK(s[0].excluded == 2);
    CHECK(lines_of(write_horizon_summary(s))[1].find(",NA,NA,NA,NA,NA,0,2") != std::string::npos);
  }
  CHECK_THROWS_AS(horizon_summary(std::span<const ScoreRow>{}), ValidationError);
}

TEST_CASE("horizon summary is invariant to row order", "[evaluation][property]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 50);
  std::vector<ScoreRow> rows;
  for (const char* p : {"A", "B", "C", "D", "E"}) {
    for (int h = 1; h <= 4; ++h) {
      for (int k = 0; k < 6; ++k) {
        const double obs = u(rng);
        rows.push_back(row(p, h, u(rng), obs, u(rng), obs - u(rng), obs + u(rng) - 10));
      }
    }
  }
  const auto reference = write_horizon_summary(horizon_summary(rows));
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(rows.begin(), rows.end(), rng);
    REQUIRE(write_horizon_summary(horizon_summary(rows)) == reference);
  }
}

TEST_CASE("scale equivariance", "[evaluation][property]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 100);
  std::uniform_real_distribution<double> scale(0.01, 100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoreRow> rows, scaled;
    const double c = scale(rng);
    for (int i = 0; i < 15; ++i) {
      rows.push_back(row("A", 1, u(rng), u(rng), u(rng)));
      auto r = rows.back();
      r.predicted *= c;
      r.observed *= c;
      r.baseline *= c;
      scaled.push_back(r);
    }
    REQUIRE_THAT(mae(scaled), WithinRel(c * mae(rows), 1e-12));
    REQUIRE_THAT(rel_mae(scaled).value, WithinRel(rel_mae(rows).value, 1e-12));
    REQUIRE(rank_correlation(scaled) == rank_correlation(rows));
  }
}

TEST_CASE("score_forecasts matches truth and baseline", "[evaluation]") {
  SeriesMap truth;
  std::vector<double> v(11 * 26);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 26);
  truth["A"] = history(to_absolute({2004, 1}), v);
  ForecastRecord f;
  f.province = "A";
  f.analysis_date = parse_date("2014-05-21");
  f.origin = to_absolute({2014, 4});
  f.step = 8;
  f.target = f.origin + 8;
  f.point = 7.5;
  f.intervals = {{0.95, 2.0, 20.0}};
  auto missing = f;
  missing.step = 30;
  missing.target = f.origin + 30;
  auto other = f;
  other.province = "Z";
  const std::vector<ForecastRecord> forecasts{f, missing, other};
  const auto scored = score_forecasts(forecasts, truth, 6);
  REQUIRE(scored.rows.size() == 1);
  CHECK(scored.unscored.size() == 2);
  const auto& r = scored.rows[0];
  CHECK(r.observed == 11.0);
  CHECK(r.baseline == 11.0);
  CHECK(r.horizon == 8);
  CHECK(r.absolute_horizon == 2);
  CHECK(r.lower == 2.0);
  CHECK(r.upper == 20.0);
}

TEST_CASE("real-time versus full-data comparison", "[evaluation]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 40);
  std::vector<ScoreRow> fd;
  for (const char* p : {"A", "B", "C"}) {
    for (int d = 0; d < 5; ++d) {
      for (int h = 1; h <= 10; ++h) {
        auto r = row(p, h, u(rng), u(rng), u(rng));
        r.analysis_date = Date(std::chrono::sys_days(parse_date("2014-01-01")) + std::chrono::days(14 * d));
        r.origin = to_absolute({2013, 26}) + d;
        r.target = r.origin + h;
        fd.push_back(r);
      }
    }
  }

  SECTION("identical sets give one everywhere") {
    for (auto mode : {ComparisonMode::SameOrigin, ComparisonMode::AbsoluteHorizon}) {
      const auto t = compare_realtime_fulldata(fd, fd, mode, 0);
      CHECK(t.rows.size() == 10);
      CHECK(t.unpaired_realtime == 0);
      for (const auto& c : t.cells) CHECK(c.rel.value == 1.0);
      for (const auto& row : t.rows) {
        CHECK(row.pairs == 15);
        for (double q : row.relmae_quantiles) CHECK(q == 1.0);
      }
    }
  }

  SECTION("absolute horizon pairs real-time step h + l with full-data step h") {
    // Real-time origin sits 6 biweeks before the full-data origin.
    std::vector<ScoreRow> rt;
    for (const auto& r : fd) {
      auto x = r;
      x.origin = r.origin - 6;
      x.horizon = r.horizon + 6;
      x.absolute_horizon = r.horizon;
      x.predicted = r.predicted + (r.predicted >= r.observed ? 2.0 : -2.0);
      rt.push_back(x);
    }
    const auto t = compare_realtime_fulldata(rt, fd, ComparisonMode::AbsoluteHorizon, 6);
    CHECK(t.unpaired_realtime == 0);
    CHECK(t.unpaired_fulldata == 0);
    REQUIRE(t.rows.size() == 10);
    CHECK(t.rows.front().horizon == 1);
    for (const auto& c : t.cells) CHECK(c.rel.value > 1.0);

    // Under same-origin keys these sets share no origin with step <= 10 on both sides.
    const auto s = compare_realtime_fulldata(rt, fd, ComparisonMode::SameOrigin, 6);
    CHECK(s.unpaired_realtime + s.unpaired_fulldata > 0);
  }

  SECTION("unpaired keys are listed and counted") {
    auto rt = fd;
    rt.erase(rt.begin(), rt.begin() + 3);
    auto extra = fd.back();
    extra.province = "Q";
    rt.push_back(extra);
    const auto t = compare_realtime_fulldata(rt, fd, ComparisonMode::SameOrigin, 0);
    CHECK(t.unpaired_fulldata == 3);
    CHECK(t.unpaired_realtime == 1);
    CHECK(t.unpaired_keys.size() == 4);
    std::size_t pairs = 0;
    for (const auto& r : t.rows) pairs += r.pairs;
    CHECK(pairs == fd.size() - 3);
  }

  SECTION("duplicate keys are rejected") {
    auto dup = fd;
    dup.push_back(fd.front());
    CHECK_THROWS_AS(compare_realtime_fulldata(dup, fd, ComparisonMode::SameOrigin, 0), ValidationError);
    CHECK_THROWS_AS(compare_realtime_fulldata(fd, dup, ComparisonMode::SameOrigin, 0), ValidationError);
  }

  CHECK(parse_comparison_mode("same_origin") == ComparisonMode::SameOrigin);
  CHECK(parse_comparison_mode(to_string(ComparisonMode::AbsoluteHorizon)) ==
        ComparisonMode::AbsoluteHorizon);
  CHECK_THROWS_AS(parse_comparison_mode("table3"), ValidationError);
}

TEST_CASE("score rows round-trip through text", "[evaluation]") {
  std::vector<ScoreRow> rows{row("A", 1, 10.25, 9, 7, 3, 12), row("B", 7, 0.1, 0, 1, 0, 0.5)};
  rows[1].absolute_horizon = 1;
  const auto text = write_scores(rows);
  auto lines = lines_of(text);
  const auto back = parse_scores(lines);
  REQUIRE(back.size() == 2);
  CHECK(write_scores(back) == text);
  CHECK(back[1].absolute_horizon == 1);
  CHECK(back[0].predicted == 10.25);
  lines[2] = "B,2014-01-29,2013-B23,7,1,2014-B04,x,0,1,0,0.5";
  CHECK_THROWS_WITH(parse_scores(lines, "s.csv"), ContainsSubstring("s.csv: line 3"));
  lines[0] = "province";
  CHECK_THROWS_AS(parse_scores(lines), ParseError);
}

TEST_CASE("figure data writers", "[evaluation]") {
  std::vector<ScoreRow> rows{row("B", 2, 1, 2, 3, 0, 4), row("A", 1, 5, 6, 7, 4, 8), row("A", 3, 1, 1, 1, 1, 1)};
  const std::vector<int> steps{1, 2};
  const auto series = lines_of(write_step_series(rows, steps));
  REQUIRE(series.size() == 3);
  CHECK(series[1].rfind("A,1,", 0) == 0);
  CHECK(series[2].rfind("B,2,", 0) == 0);

  const auto grid = province_relmae_grid(rows);
  REQUIRE(grid.size() == 3);
  const auto grid_text = lines_of(write_relmae_grid(grid));
  CHECK(grid_text[0] == "province,horizon,relative_mae,defined");
  CHECK(grid_text[3] == "B,2,1,true");
  CHECK(grid_text[2] == "A,3,NA,false");
}
