#include "denguecast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/stats.hpp"
#include "denguecast/text_io.hpp"

namespace denguecast {

double seasonal_baseline(const BiweekSeries& history, AbsoluteBiweek target, int window_years) {
  if (window_years < 1) throw ValidationError("seasonal_baseline: window must be >= 1 year");
  std::vector<double> prior;
  for (int k = 1; k <= window_years; ++k) {
    const AbsoluteBiweek t = target - k * kBiweeksPerYear;
    if (history.contains(t)) prior.push_back(history.at(t));
  }
  if (prior.empty()) {
    throw ValidationError(fmt::format("seasonal_baseline: no history for '{}' before {}",
                                      history.province, format_biweek(target)));
  }
  return stats::median(std::move(prior));
}

ScoringResult score_forecasts(std::span<const ForecastRecord> forecasts, const SeriesMap& truth,
                              int lag, int baseline_window_years, double level) {
  ScoringResult out;
  for (const auto& f : forecasts) {
    const auto key = fmt::format("{}/{}/{}", f.province, format_date(f.analysis_date), f.step);
    auto it = truth.find(f.province);
    if (it == truth.end() || !it->second.contains(f.target)) {
      out.unscored.push_back(key + ": no observed value");
      continue;
    }
    ScoreRow r;
    try {
      r.baseline = seasonal_baseline(it->second, f.target, baseline_window_years);
    } catch (const ValidationError&) {
      out.unscored.push_back(key + ": no baseline history");
      continue;
    }
    const auto& iv = f.interval(level);
    r.province = f.province;
    r.analysis_date = f.analysis_date;
    r.origin = f.origin;
    r.horizon = f.step;
    r.absolute_horizon = f.step - lag;
    r.target = f.target;
    r.predicted = f.point;
    r.observed = it->second.at(f.target);
    r.lower = iv.lower;
    r.upper = iv.upper;
    out.rows.push_back(std::move(r));
  }
  return out;
}

double mae(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw ValidationError("mae: length mismatch");
  if (predicted.empty()) throw ValidationError("mae: no rows");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - observed[i]);
  return sum / static_cast<double>(predicted.size());
}

double mae(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw ValidationError("mae: no rows");
  double sum = 0.0;
  for (const auto& r : rows) sum += std::abs(r.predicted - r.observed);
  return sum / static_cast<double>(rows.size());
}

double baseline_mae(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw ValidationError("baseline_mae: no rows");
  double sum = 0.0;
  for (const auto& r : rows) sum += std::abs(r.baseline - r.observed);
  return sum / static_cast<double>(rows.size());
}

RelativeMae rel_mae(double model_mae, double reference_mae) {
  if (reference_mae == 0.0) return {std::nan(""), false};
  return {model_mae / reference_mae, true};
}

RelativeMae rel_mae(std::span<const ScoreRow> rows) { return rel_mae(mae(rows), baseline_mae(rows)); }

double coverage(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw ValidationError("coverage: no rows");
  std::size_t inside = 0;
  for (const auto& r : rows) inside += (r.lower <= r.observed && r.observed <= r.upper) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(rows.size());
}

double rank_correlation(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw ValidationError("rank_correlation: no rows");
  std::vector<double> p, o;
  for (const auto& r : rows) {
    p.push_back(r.predicted);
    o.push_back(r.observed);
  }
  return stats::spearman(p, o);
}

namespace {

std::vector<double> defined_quantiles(const std::vector<RelativeMae>& values,
                                      std::span<const double> probs, std::size_t& used,
                                      std::size_t& excluded) {
  std::vector<double> v;
  excluded = 0;
  for (const auto& r : values) {
    if (r.defined) {
      v.push_back(r.value);
    } else {
      ++excluded;
    }
  }
  used = v.size();
  if (v.empty()) return std::vector<double>(probs.size(), std::nan(""));
  return stats::quantiles(std::move(v), probs);
}

std::string fmt_or_na(double v) { return std::isnan(v) ? "NA" : io::format_number(v); }

std::string quantile_columns(std::span<const double> probs) {
  std::string out;
  for (double p : probs) out += fmt::format(",relmae_q{:02}", static_cast<int>(std::lround(p * 100)));
  return out;
}

}  // namespace

std::vector<HorizonSummary> horizon_summary(std::span<const ScoreRow> rows,
                                            std::span<const double> probs) {
  if (rows.empty()) throw ValidationError("horizon_summary: no score rows");
  // Canonical row order keeps floating-point sums independent of input order.
  std::vector<ScoreRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoreRow& a, const ScoreRow& b) {
    const auto da = std::chrono::sys_days(a.analysis_date), db = std::chrono::sys_days(b.analysis_date);
    return std::tie(a.province, da, a.origin.ordinal, a.target.ordinal, a.predicted, a.observed,
                    a.baseline, a.lower, a.upper) <
           std::tie(b.province, db, b.origin.ordinal, b.target.ordinal, b.predicted, b.observed,
                    b.baseline, b.lower, b.upper);
  });
  std::map<int, std::vector<ScoreRow>> by_horizon;
  for (const auto& r : sorted) by_horizon[r.horizon].push_back(r);
  std::vector<HorizonSummary> out;
  for (const auto& [h, group] : by_horizon) {
    HorizonSummary s;
    s.horizon = h;
    s.n = group.size();
    s.spearman_rho = rank_correlation(group);
    s.coverage_95 = coverage(group);
    s.mae = mae(group);
    std::map<std::string, std::vector<ScoreRow>> by_province;
    for (const auto& r : group) by_province[r.province].push_back(r);
    std::vector<RelativeMae> rel;
    for (const auto& [p, pr] : by_province) rel.push_back(rel_mae(pr));
    s.relmae_quantiles = defined_quantiles(rel, probs, s.provinces, s.excluded);
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view to_string(ComparisonMode m) {
  return m == ComparisonMode::SameOrigin ? "same_origin" : "absolute_horizon";
}

ComparisonMode parse_comparison_mode(std::string_view text) {
  if (text == "same_origin") return ComparisonMode::SameOrigin;
  if (text == "absolute_horizon") return ComparisonMode::AbsoluteHorizon;
  throw ValidationError(fmt::format("unknown comparison mode '{}'", text));
}

ComparisonTable compare_realtime_fulldata(std::span<const ScoreRow> realtime,
                                          std::span<const ScoreRow> fulldata, ComparisonMode mode,
                                          int lag, std::span<const double> probs) {
  using Key = std::tuple<std::string, int, int, int>;  // province, date-or-origin, target-or-0, horizon
  auto key_of = [&](const ScoreRow& r, bool is_realtime) -> Key {
    if (mode == ComparisonMode::SameOrigin) return {r.province, r.origin.ordinal, 0, r.horizon};
    const int days = static_cast<int>(std::chrono::sys_days(r.analysis_date).time_since_epoch().count());
    return {r.province, days, r.target.ordinal, is_realtime ? r.horizon - lag : r.horizon};
  };
  auto describe = [&](const Key& k, std::string_view arm) {
    return fmt::format("{}: {} {} {} h={}", arm, std::get<0>(k), std::get<1>(k), std::get<2>(k),
                       std::get<3>(k));
  };

  std::map<Key, const ScoreRow*> rt, fd;
  for (const auto& r : realtime) {
    if (!rt.emplace(key_of(r, true), &r).second) {
      throw ValidationError("compare_realtime_fulldata: duplicate real-time key");
    }
  }
  for (const auto& r : fulldata) {
    if (!fd.emplace(key_of(r, false), &r).second) {
      throw ValidationError("compare_realtime_fulldata: duplicate full-data key");
    }
  }

  ComparisonTable table;
  table.mode = mode;
  table.probs.assign(probs.begin(), probs.end());
  // province -> horizon -> (sum |rt err|, sum |fd err|, n)
  std::map<int, std::map<std::string, std::tuple<double, double, std::size_t>>> acc;
  for (const auto& [k, r] : rt) {
    auto it = fd.find(k);
    if (it == fd.end()) {
      ++table.unpaired_realtime;
      table.unpaired_keys.push_back(describe(k, "realtime"));
      continue;
    }
    auto& [a, b, n] = acc[std::get<3>(k)][std::get<0>(k)];
    a += std::abs(r->predicted - r->observed);
    b += std::abs(it->second->predicted - it->second->observed);
    ++n;
  }
  for (const auto& [k, r] : fd) {
    if (!rt.contains(k)) {
      ++table.unpaired_fulldata;
      table.unpaired_keys.push_back(describe(k, "fulldata"));
    }
  }
  for (const auto& [h, provinces] : acc) {
    ComparisonRow row;
    row.horizon = h;
    std::vector<RelativeMae> rel;
    for (const auto& [p, v] : provinces) {
      const auto& [a, b, n] = v;
      row.pairs += n;
      const auto r = rel_mae(a / static_cast<double>(n), b / static_cast<double>(n));
      rel.push_back(r);
      table.cells.push_back({p, h, r});
    }
    row.relmae_quantiles = defined_quantiles(rel, probs, row.provinces, row.excluded);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<ComparisonTable::Cell> province_relmae_grid(std::span<const ScoreRow> rows) {
  std::map<std::pair<std::string, int>, std::vector<ScoreRow>> groups;
  for (const auto& r : rows) groups[{r.province, r.horizon}].push_back(r);
  std::vector<ComparisonTable::Cell> out;
  for (const auto& [k, g] : groups) out.push_back({k.first, k.second, rel_mae(g)});
  return out;
}

// --- text outputs -----------------------------------------------------------

namespace {
constexpr std::string_view kScoreHeader =
    "province,analysis_date,origin,horizon,absolute_horizon,target_biweek,predicted,observed,"
    "baseline,lo95,hi95";
}

std::string write_scores(std::span<const ScoreRow> rows) {
  std::string out(kScoreHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.province,
                       format_date(r.analysis_date), format_biweek(r.origin), r.horizon,
                       r.absolute_horizon, format_biweek(r.target), io::format_number(r.predicted),
                       io::format_number(r.observed), io::format_number(r.baseline),
                       io::format_number(r.lower), io::format_number(r.upper));
  }
  return out;
}

std::vector<ScoreRow> parse_scores(std::span<const std::string> lines, std::string_view source) {
  if (lines.empty() || lines.front() != kScoreHeader) {
    throw ParseError(fmt::format("{}: line 1: expected header '{}'", source, kScoreHeader));
  }
  std::vector<ScoreRow> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = io::split_fields(lines[n]);
    try {
      if (f.size() != 11) throw ParseError("expected 11 fields");
      ScoreRow r;
      r.province = std::string(f[0]);
      r.analysis_date = parse_date(f[1]);
      r.origin = parse_biweek(f[2]);
      r.horizon = static_cast<int>(io::parse_integer(f[3], "horizon"));
      r.absolute_horizon = static_cast<int>(io::parse_integer(f[4], "absolute_horizon"));
      r.target = parse_biweek(f[5]);
      r.predicted = io::parse_number(f[6], "predicted");
      r.observed = io::parse_number(f[7], "observed");
      r.baseline = io::parse_number(f[8], "baseline");
      r.lower = io::parse_number(f[9], "lower");
      r.upper = io::parse_number(f[10], "upper");
      out.push_back(std::move(r));
    } catch (const ValidationError& e) {
      throw ParseError(fmt::format("{}: line {}: {}", source, n + 1, e.what()));
    }
  }
  return out;
}

std::string write_horizon_summary(std::span<const HorizonSummary> rows,
                                  std::span<const double> probs) {
  std::string out = "horizon,n,spearman_rho,coverage_95,mae" + quantile_columns(probs) +
                    ",provinces,excluded\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}", r.horizon, r.n, io::format_number(r.spearman_rho),
                       io::format_number(r.coverage_95), io::format_number(r.mae));
    for (double q : r.relmae_quantiles) out += "," + fmt_or_na(q);
    out += fmt::format(",{},{}\n", r.provinces, r.excluded);
  }
  return out;
}

std::string write_comparison(const ComparisonTable& table) {
  std::string out = "comparison,horizon,pairs" + quantile_columns(table.probs) +
                    ",provinces,excluded\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{},{}", to_string(table.mode), r.horizon, r.pairs);
    for (double q : r.relmae_quantiles) out += "," + fmt_or_na(q);
    out += fmt::format(",{},{}\n", r.provinces, r.excluded);
  }
  return out;
}

std::string write_step_series(std::span<const ScoreRow> rows, std::span<const int> steps) {
  const std::set<int> wanted(steps.begin(), steps.end());
  std::vector<const ScoreRow*> picked;
  for (const auto& r : rows) {
    if (wanted.contains(r.horizon)) picked.push_back(&r);
  }
  std::stable_sort(picked.begin(), picked.end(), [](const ScoreRow* a, const ScoreRow* b) {
    return std::tie(a->province, a->horizon, a->target.ordinal) <
           std::tie(b->province, b->horizon, b->target.ordinal);
  });
  std::string out = "province,step,target_biweek,observed,predicted,lo95,hi95\n";
  for (const auto* r : picked) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r->province, r->horizon, format_biweek(r->target),
                       io::format_number(r->observed), io::format_number(r->predicted),
                       io::format_number(r->lower), io::format_number(r->upper));
  }
  return out;
}

std::string write_fan_chart(std::span<const ForecastRecord> forecasts, const SeriesMap& truth,
                            int history_biweeks) {
  std::string out = "province,kind,biweek,step,value,level,lower,upper\n";
  std::map<std::string, AbsoluteBiweek> origins;
  for (const auto& f : forecasts) origins.emplace(f.province, f.origin);
  for (const auto& [p, origin] : origins) {
    auto it = truth.find(p);
    if (it == truth.end()) continue;
    for (AbsoluteBiweek t = origin - (history_biweeks - 1); t <= origin; t = t + 1) {
      if (it->second.contains(t)) {
        out += fmt::format("{},observed,{},0,{},,,\n", p, format_biweek(t),
                           io::format_number(it->second.at(t)));
      }
    }
  }
  for (const auto& f : forecasts) {
    for (const auto& iv : f.intervals) {
      out += fmt::format("{},forecast,{},{},{},{},{},{}\n", f.province, format_biweek(f.target),
                         f.step, io::format_number(f.point), level_label(iv.level),
                         io::format_number(iv.lower), io::format_number(iv.upper));
    }
  }
  return out;
}

std::string write_relmae_grid(std::span<const ComparisonTable::Cell> cells) {
  std::string out = "province,horizon,relative_mae,defined\n";
  for (const auto& c : cells) {
    out += fmt::format("{},{},{},{}\n", c.province, c.horizon, fmt_or_na(c.rel.value),
                       c.rel.defined ? "true" : "false");
  }
  return out;
}

}  // namespace denguecast
