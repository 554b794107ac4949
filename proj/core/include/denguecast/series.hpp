#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "denguecast/calendar.hpp"
#include "denguecast/monotone_cubic.hpp"
#include "denguecast/store.hpp"

namespace denguecast {

enum class Provenance { Observed, Interpolated, Smoothed, Missing };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

/// Per-province biweekly values over a contiguous ordinal range.
struct BiweekSeries {
  std::string province;
  AbsoluteBiweek start;
  std::vector<double> values;
  std::vector<Provenance> provenance;

  bool empty() const noexcept { return values.empty(); }
  std::size_t size() const noexcept { return values.size(); }
  /// Last ordinal (inclusive). Undefined for an empty series.
  AbsoluteBiweek last() const { return start + static_cast<int>(values.size()) - 1; }
  bool contains(AbsoluteBiweek t) const {
    return !empty() && t >= start && t <= last();
  }
  double at(AbsoluteBiweek t) const;
  /// Sub-range [first, last]; both must lie within the series.
  BiweekSeries slice(AbsoluteBiweek first, AbsoluteBiweek last) const;
};

using SeriesMap = std::map<std::string, BiweekSeries>;

/// Maps merged or renamed province codes onto the code they are counted under.
using AliasMap = std::map<std::string, std::string>;

std::string resolve_alias(const AliasMap& aliases, const std::string& province);

/// Counts records by onset biweek over [first, last] for one province.
/// Records whose province aliases onto `province` are included.
BiweekSeries aggregate_linelist(const Snapshot& snapshot, const std::string& province,
                                AbsoluteBiweek first, AbsoluteBiweek last,
                                std::optional<Diagnosis> filter = Diagnosis::DHF,
                                const AliasMap& aliases = {});

/// `aggregate_linelist` for several provinces in one pass over the records.
SeriesMap aggregate_linelist(const Snapshot& snapshot, std::span<const std::string> provinces,
                             AbsoluteBiweek first, AbsoluteBiweek last,
                             std::optional<Diagnosis> filter = Diagnosis::DHF,
                             const AliasMap& aliases = {});

/// Converts contiguous monthly counts of one province into biweekly counts.
///
/// A monotone cubic is fitted through cumulative totals at month ends
/// (anchored at zero on the first day of the first month) and differenced at
/// biweek boundaries. Only biweeks fully inside the covered months are
/// returned. A single month is split in proportion to day overlap.
BiweekSeries interpolate_monthly(std::span<const MonthlyCount> monthly);

/// The cumulative-count interpolant used by `interpolate_monthly`, with the
/// abscissa in days since 1968-01-01.
MonotoneCubic cumulative_monthly_curve(std::span<const MonthlyCount> monthly);
double days_since_epoch(const Date& d);

/// Drops the last `lag` biweeks before the analysis biweek; the result ends
/// at `analysis_biweek(analysis_date) - lag`.
BiweekSeries truncate_for_delay(const BiweekSeries& series, const Date& analysis_date, int lag);

/// Centered moving average whose window shrinks at the edges.
BiweekSeries smooth(const BiweekSeries& series, int window = 3);

/// Line-list values take precedence wherever both sources cover a biweek.
/// Gaps between the sources are zero-filled and flagged Missing.
BiweekSeries merge_sources(const BiweekSeries& monthly, const BiweekSeries& linelist);

inline double floored_offset(double value, double floor) { return value < floor ? floor : value; }

inline constexpr std::string_view kSeriesHeader = "province,year,biweek,value,provenance";

std::string write_series(const SeriesMap& series);
SeriesMap read_series(const std::filesystem::path& path);
SeriesMap parse_series(std::span<const std::string> lines, std::string_view source = "<input>");

}  // namespace denguecast
