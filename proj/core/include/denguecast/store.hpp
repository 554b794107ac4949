#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "denguecast/calendar.hpp"

namespace denguecast {

enum class Diagnosis { DF, DHF, DSS };

std::string_view to_string(Diagnosis d);
Diagnosis parse_diagnosis(std::string_view text);

/// One line-list case. `arrival` is the date the record became available for
/// analysis; the reporting delay is `arrival - onset`.
struct CaseRecord {
  std::string record_id;
  std::string province;
  Date onset;
  Diagnosis diagnosis = Diagnosis::DHF;
  Date arrival;

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

struct MonthlyCount {
  std::string province;
  int year = 0;
  int month = 1;
  long long count = 0;

  friend bool operator==(const MonthlyCount&, const MonthlyCount&) = default;
};

struct Rejection {
  std::size_t position;  // index within the submitted batch
  std::string record_id;
  std::string reason;
};

struct IngestReport {
  std::size_t ingested = 0;
  std::vector<Rejection> rejections;
};

/// Immutable view of the records that had arrived by `as_of`. Cheap to copy
/// and safe to share across threads.
class Snapshot {
 public:
  Snapshot(Date as_of, std::shared_ptr<const std::vector<CaseRecord>> records,
           std::shared_ptr<const std::set<std::string>> provinces);

  const Date& as_of() const noexcept { return as_of_; }
  std::span<const CaseRecord> records() const noexcept { return *records_; }
  std::size_t size() const noexcept { return records_->size(); }
  bool empty() const noexcept { return records_->empty(); }
  /// Provinces known to the store when the snapshot was taken.
  const std::set<std::string>& provinces() const noexcept { return *provinces_; }

  /// SHA-256 over the snapshot's records in canonical line format.
  std::string content_hash() const;

 private:
  Date as_of_;
  std::shared_ptr<const std::vector<CaseRecord>> records_;
  std::shared_ptr<const std::set<std::string>> provinces_;
};

/// Append-only bitemporal case store. Records are never edited or removed;
/// `as_of` reconstructs what was available on any past date.
///
/// Directory layout when persistent:
///   records.log  header + one CaseRecord per line, in ingest order
///   monthly.log  header + one MonthlyCount per line, in ingest order
/// Both files are only ever appended to.
///
/// One writer, any number of concurrent readers.
class VersionedStore {
 public:
  /// In-memory store.
  VersionedStore() = default;

  /// Opens (creating if needed) a persistent store directory and replays it.
  static VersionedStore open(const std::filesystem::path& dir);

  VersionedStore(VersionedStore&& other) noexcept;
  VersionedStore& operator=(VersionedStore&& other) noexcept;

  /// Validates each record independently; valid records are appended, the
  /// rest are reported. Duplicate ids (within the store or the batch) and
  /// arrivals before onset are rejected.
  IngestReport ingest(std::span<const CaseRecord> records);

  /// Same contract for monthly counts; (province, year, month) is the key.
  IngestReport ingest_monthly(std::span<const MonthlyCount> counts);

  Snapshot as_of(const Date& d, std::optional<Diagnosis> filter = std::nullopt) const;
  /// Every record regardless of arrival date (the final, complete data).
  Snapshot everything(std::optional<Diagnosis> filter = std::nullopt) const;

  std::vector<MonthlyCount> monthly() const;
  std::size_t size() const;
  std::set<std::string> provinces() const;
  std::optional<Date> earliest_arrival() const;

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  Snapshot filtered(std::optional<Date> as_of, std::optional<Diagnosis> filter) const;

  mutable std::shared_mutex mutex_;
  std::optional<std::filesystem::path> dir_;
  std::vector<CaseRecord> records_;
  std::unordered_set<std::string> ids_;
  std::vector<MonthlyCount> monthly_;
  std::set<std::tuple<std::string, int, int>> monthly_keys_;
  std::set<std::string> provinces_;
};

/// Line formats shared by the store log and the CLI inputs.
inline constexpr std::string_view kLinelistHeader =
    "record_id,province,onset_date,diagnosis,arrival_ts";
inline constexpr std::string_view kMonthlyHeader = "province,year,month,count";

std::string format_record(const CaseRecord& r);
std::string format_monthly(const MonthlyCount& m);

/// Parses a delimited line-list file. Any schema violation throws a
/// ParseError that names the 1-based line number.
std::vector<CaseRecord> read_linelist(const std::filesystem::path& path);
std::vector<CaseRecord> parse_linelist(std::span<const std::string> lines,
                                       std::string_view source = "<input>");
std::vector<MonthlyCount> read_monthly(const std::filesystem::path& path);
std::string write_linelist(std::span<const CaseRecord> records);

/// Empirical type-7 quantiles of reporting delays, in weeks.
std::vector<double> delay_quantiles(const Snapshot& snapshot, std::span<const double> probs);

enum class DelayFamily { LogNormal, Point, Empirical, None };

/// Distribution of reporting delays used to synthesize arrival dates.
///
/// LogNormal is calibrated by its median and 75th percentile (weeks).
/// Point places all mass at `point_weeks`. Empirical resamples `sample_weeks`.
/// None leaves arrival == onset and skips the clamp; it exists for
/// zero-delay control experiments.
struct DelayModel {
  DelayFamily family = DelayFamily::LogNormal;
  double median_weeks = 6.0;
  double p75_weeks = 10.0;
  double point_weeks = 0.0;
  std::vector<double> sample_weeks;
  double min_weeks = 1.0;
  double max_weeks = 50.0;

  void validate() const;
};

std::string_view to_string(DelayFamily f);
DelayFamily parse_delay_family(std::string_view text);

/// Returns copies of `complete` whose arrival dates are onset + a delay drawn
/// from `model`, rounded to whole days and clamped to [min_weeks, max_weeks].
/// Deterministic for a given seed.
std::vector<CaseRecord> inject_delays(std::span<const CaseRecord> complete,
                                      const DelayModel& model, std::uint64_t seed);

}  // namespace denguecast
