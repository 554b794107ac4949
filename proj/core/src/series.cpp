#include "denguecast/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/monotone_cubic.hpp"
#include "denguecast/text_io.hpp"

namespace denguecast {

namespace {

const Date kEpochDate{std::chrono::year{kEpochYear}, std::chrono::month{1}, std::chrono::day{1}};

Date first_of_month(int year, int month) {
  return Date{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
              std::chrono::day{1}};
}

Date first_of_next_month(int year, int month) {
  return month == 12 ? first_of_month(year + 1, 1) : first_of_month(year, month + 1);
}

std::vector<MonthlyCount> validated_months(std::span<const MonthlyCount> monthly) {
  if (monthly.empty()) throw ValidationError("interpolate_monthly: no monthly counts");
  std::vector<MonthlyCount> months(monthly.begin(), monthly.end());
  std::sort(months.begin(), months.end(), [](const auto& a, const auto& b) {
    return std::tie(a.year, a.month) < std::tie(b.year, b.month);
  });
  for (std::size_t i = 0; i < months.size(); ++i) {
    const auto& m = months[i];
    if (m.province != months.front().province) {
      throw ValidationError("interpolate_monthly: counts span several provinces");
    }
    if (m.count < 0) {
      throw ValidationError(fmt::format("interpolate_monthly: negative count for {}-{:02d}",
                                        m.year, m.month));
    }
    if (m.month < 1 || m.month > 12) throw ValidationError("interpolate_monthly: bad month");
    if (i > 0) {
      const auto& p = months[i - 1];
      const int expected_year = p.month == 12 ? p.year + 1 : p.year;
      const int expected_month = p.month == 12 ? 1 : p.month + 1;
      if (m.year != expected_year || m.month != expected_month) {
        throw ValidationError(fmt::format(
            "interpolate_monthly: months not contiguous after {}-{:02d}", p.year, p.month));
      }
    }
  }
  return months;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Observed: return "observed";
    case Provenance::Interpolated: return "interpolated";
    case Provenance::Smoothed: return "smoothed";
    case Provenance::Missing: return "missing";
  }
  return "?";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "observed") return Provenance::Observed;
  if (text == "interpolated") return Provenance::Interpolated;
  if (text == "smoothed") return Provenance::Smoothed;
  if (text == "missing") return Provenance::Missing;
  throw ParseError(fmt::format("invalid provenance '{}'", text));
}

double BiweekSeries::at(AbsoluteBiweek t) const {
  if (!contains(t)) {
    throw ValidationError(fmt::format("series {} has no value at {}", province, format_biweek(t)));
  }
  return values[static_cast<std::size_t>(t - start)];
}

BiweekSeries BiweekSeries::slice(AbsoluteBiweek first, AbsoluteBiweek last_inclusive) const {
  if (last_inclusive < first) return BiweekSeries{province, first, {}, {}};
  if (!contains(first) || !contains(last_inclusive)) {
    throw ValidationError(fmt::format("series {}: slice {}..{} outside {}..{}", province,
                                      format_biweek(first), format_biweek(last_inclusive),
                                      format_biweek(start), format_biweek(last())));
  }
  const auto b = static_cast<std::size_t>(first - start);
  const auto e = static_cast<std::size_t>(last_inclusive - start) + 1;
  BiweekSeries out{province, first, {}, {}};
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(b),
                    values.begin() + static_cast<std::ptrdiff_t>(e));
  out.provenance.assign(provenance.begin() + static_cast<std::ptrdiff_t>(b),
                        provenance.begin() + static_cast<std::ptrdiff_t>(e));
  return out;
}

std::string resolve_alias(const AliasMap& aliases, const std::string& province) {
  std::string code = province;
  // Follow chains, guarding against cycles.
  for (std::size_t hops = 0; hops <= aliases.size(); ++hops) {
    auto it = aliases.find(code);
    if (it == aliases.end() || it->second == code) return code;
    code = it->second;
  }
  throw ValidationError(fmt::format("alias cycle involving province '{}'", province));
}

BiweekSeries aggregate_linelist(const Snapshot& snapshot, const std::string& province,
                                AbsoluteBiweek first, AbsoluteBiweek last,
                                std::optional<Diagnosis> filter, const AliasMap& aliases) {
  bool known = false;
  for (const auto& p : snapshot.provinces()) {
    if (resolve_alias(aliases, p) == province) {
      known = true;
      break;
    }
  }
  if (!known) throw ValidationError(fmt::format("unknown province '{}'", province));
  if (last < first) throw ValidationError("aggregate_linelist: empty biweek range");

  BiweekSeries out{province, first, {}, {}};
  const auto n = static_cast<std::size_t>(last - first) + 1;
  out.values.assign(n, 0.0);
  out.provenance.assign(n, Provenance::Observed);
  for (const auto& r : snapshot.records()) {
    if (filter && r.diagnosis != *filter) continue;
    if (resolve_alias(aliases, r.province) != province) continue;
    const AbsoluteBiweek b = absolute_biweek(r.onset);
    if (b < first || b > last) continue;
    out.values[static_cast<std::size_t>(b - first)] += 1.0;
  }
  return out;
}

SeriesMap aggregate_linelist(const Snapshot& snapshot, std::span<const std::string> provinces,
                             AbsoluteBiweek first, AbsoluteBiweek last,
                             std::optional<Diagnosis> filter, const AliasMap& aliases) {
  if (last < first) throw ValidationError("aggregate_linelist: empty biweek range");
  std::set<std::string> known;
  for (const auto& p : snapshot.provinces()) known.insert(resolve_alias(aliases, p));
  const auto n = static_cast<std::size_t>(last - first) + 1;
  SeriesMap out;
  for (const auto& p : provinces) {
    if (!known.contains(p)) throw ValidationError(fmt::format("unknown province '{}'", p));
    out.emplace(p, BiweekSeries{p, first, std::vector<double>(n, 0.0),
                                std::vector<Provenance>(n, Provenance::Observed)});
  }
  std::map<std::string, BiweekSeries*, std::less<>> target;
  for (const auto& p : snapshot.provinces()) {
    auto it = out.find(resolve_alias(aliases, p));
    if (it != out.end()) target.emplace(p, &it->second);
  }
  for (const auto& r : snapshot.records()) {
    if (filter && r.diagnosis != *filter) continue;
    auto it = target.find(r.province);
    if (it == target.end()) continue;
    const AbsoluteBiweek b = absolute_biweek(r.onset);
    if (b < first || b > last) continue;
    it->second->values[static_cast<std::size_t>(b - first)] += 1.0;
  }
  return out;
}

double days_since_epoch(const Date& d) { return static_cast<double>(days_between(kEpochDate, d)); }

MonotoneCubic cumulative_monthly_curve(std::span<const MonthlyCount> monthly) {
  const auto months = validated_months(monthly);
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(months.size() + 1);
  y.reserve(months.size() + 1);
  x.push_back(days_since_epoch(first_of_month(months.front().year, months.front().month)));
  y.push_back(0.0);
  double cumulative = 0.0;
  for (const auto& m : months) {
    cumulative += static_cast<double>(m.count);
    x.push_back(days_since_epoch(first_of_next_month(m.year, m.month)));
    y.push_back(cumulative);
  }
  return MonotoneCubic(std::move(x), std::move(y));
}

BiweekSeries interpolate_monthly(std::span<const MonthlyCount> monthly) {
  const auto months = validated_months(monthly);
  const MonotoneCubic curve = cumulative_monthly_curve(months);
  const Date begin = first_of_month(months.front().year, months.front().month);
  const Date end = first_of_next_month(months.back().year, months.back().month);

  AbsoluteBiweek first = absolute_biweek(begin);
  if (biweek_to_interval(from_absolute(first)).first != begin) first = first + 1;
  AbsoluteBiweek last = absolute_biweek(add_days(end, -1));
  if (add_days(biweek_to_interval(from_absolute(last)).last, 1) != end) last = last - 1;

  BiweekSeries out{months.front().province, first, {}, {}};
  for (AbsoluteBiweek b = first; b <= last; b = b + 1) {
    const auto iv = biweek_to_interval(from_absolute(b));
    const double lo = curve(days_since_epoch(iv.first));
    const double hi = curve(days_since_epoch(iv.last) + 1.0);
    out.values.push_back(std::max(0.0, hi - lo));
    out.provenance.push_back(Provenance::Interpolated);
  }
  return out;
}

BiweekSeries truncate_for_delay(const BiweekSeries& series, const Date& analysis_date, int lag) {
  if (lag < 0) throw ValidationError("truncate_for_delay: negative reporting lag");
  const AbsoluteBiweek t = analysis_biweek(analysis_date);
  if (series.empty() || series.last() < t) {
    throw ValidationError(fmt::format("series {} does not reach the analysis biweek {}",
                                      series.province, format_biweek(t)));
  }
  const AbsoluteBiweek keep_last = t - lag;
  if (keep_last < series.start) {
    throw ValidationError(fmt::format("series {}: truncation by {} biweeks leaves no data",
                                      series.province, lag));
  }
  return series.slice(series.start, keep_last);
}

BiweekSeries smooth(const BiweekSeries& series, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ValidationError("smooth: window must be odd and >= 1");
  }
  if (window == 1) return series;
  const int half = window / 2;
  const int n = static_cast<int>(series.size());
  BiweekSeries out{series.province, series.start, std::vector<double>(series.size()),
                   std::vector<Provenance>(series.size(), Provenance::Smoothed)};
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) sum += series.values[static_cast<std::size_t>(k)];
    out.values[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

BiweekSeries merge_sources(const BiweekSeries& monthly, const BiweekSeries& linelist) {
  if (monthly.empty()) return linelist;
  if (linelist.empty()) return monthly;
  const AbsoluteBiweek first = std::min(monthly.start, linelist.start);
  const AbsoluteBiweek last = std::max(monthly.last(), linelist.last());
  BiweekSeries out{linelist.province, first, {}, {}};
  for (AbsoluteBiweek b = first; b <= last; b = b + 1) {
    if (b >= linelist.start && b <= linelist.last()) {
      const auto i = static_cast<std::size_t>(b - linelist.start);
      out.values.push_back(linelist.values[i]);
      out.provenance.push_back(linelist.provenance[i]);
    } else if (monthly.contains(b) && b < linelist.start) {
      const auto i = static_cast<std::size_t>(b - monthly.start);
      out.values.push_back(monthly.values[i]);
      out.provenance.push_back(monthly.provenance[i]);
    } else {
      out.values.push_back(0.0);
      out.provenance.push_back(Provenance::Missing);
    }
  }
  return out;
}

std::string write_series(const SeriesMap& series) {
  std::string out(kSeriesHeader);
  out += '\n';
  for (const auto& [code, s] : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Biweek b = from_absolute(s.start + static_cast<int>(i));
      out += fmt::format("{},{},{},{},{}\n", code, b.year, b.index, io::format_number(s.values[i]),
                         to_string(s.provenance[i]));
    }
  }
  return out;
}

SeriesMap parse_series(std::span<const std::string> lines, std::string_view source) {
  if (lines.empty() || lines.front() != kSeriesHeader) {
    throw ParseError(fmt::format("{}: line 1: expected header '{}'", source, kSeriesHeader));
  }
  SeriesMap out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_fields(lines[i]);
    try {
      if (f.size() != 5) throw ParseError(fmt::format("expected 5 fields, found {}", f.size()));
      const std::string province(f[0]);
      const Biweek b{static_cast<int>(io::parse_integer(f[1], "year")),
                     static_cast<int>(io::parse_integer(f[2], "biweek"))};
      if (b.index < 1 || b.index > kBiweeksPerYear) throw ParseError("biweek out of 1..26");
      const double v = io::parse_number(f[3], "value");
      if (!(v >= 0.0)) throw ParseError("negative value");
      const Provenance p = parse_provenance(f[4]);
      auto [it, inserted] = out.try_emplace(province, BiweekSeries{province, to_absolute(b), {}, {}});
      auto& s = it->second;
      if (!inserted && to_absolute(b) != s.last() + 1) {
        throw ParseError("biweeks must be contiguous and ascending per province");
      }
      s.values.push_back(v);
      s.provenance.push_back(p);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: line {}: {}", source, i + 1, e.what()));
    }
  }
  return out;
}

SeriesMap read_series(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  return parse_series(lines, path.string());
}

}  // namespace denguecast
