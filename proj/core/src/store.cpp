#include "denguecast/store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/stats.hpp"
#include "denguecast/text_io.hpp"

namespace denguecast {

namespace {

constexpr double kZ75 = 0.6744897501960817;  // standard normal 75th percentile

bool valid_token(std::string_view s) {
  return !s.empty() && s.find_first_of(",\"\n\r") == std::string_view::npos;
}

void append_lines(const std::filesystem::path& file, std::string_view header,
                  const std::vector<std::string>& lines) {
  const bool fresh = !std::filesystem::exists(file);
  std::ofstream out(file, std::ios::app | std::ios::binary);
  if (!out) throw RuntimeFailure(fmt::format("cannot append to '{}'", file.string()));
  if (fresh) out << header << '\n';
  for (const auto& l : lines) out << l << '\n';
  out.flush();
  if (!out) throw RuntimeFailure(fmt::format("write failed for '{}'", file.string()));
}

}  // namespace

std::string_view to_string(Diagnosis d) {
  switch (d) {
    case Diagnosis::DF: return "DF";
    case Diagnosis::DHF: return "DHF";
    case Diagnosis::DSS: return "DSS";
  }
  return "?";
}

Diagnosis parse_diagnosis(std::string_view text) {
  if (text == "DF") return Diagnosis::DF;
  if (text == "DHF") return Diagnosis::DHF;
  if (text == "DSS") return Diagnosis::DSS;
  throw ParseError(fmt::format("invalid diagnosis '{}' (expected DF, DHF or DSS)", text));
}

std::string format_record(const CaseRecord& r) {
  return fmt::format("{},{},{},{},{}", r.record_id, r.province, format_date(r.onset),
                     to_string(r.diagnosis), format_date(r.arrival));
}

std::string format_monthly(const MonthlyCount& m) {
  return fmt::format("{},{},{},{}", m.province, m.year, m.month, m.count);
}

// --- Snapshot ---------------------------------------------------------------

Snapshot::Snapshot(Date as_of, std::shared_ptr<const std::vector<CaseRecord>> records,
                   std::shared_ptr<const std::set<std::string>> provinces)
    : as_of_(as_of), records_(std::move(records)), provinces_(std::move(provinces)) {}

std::string Snapshot::content_hash() const {
  std::string all;
  all.reserve(records_->size() * 48);
  for (const auto& r : *records_) {
    all += format_record(r);
    all += '\n';
  }
  return io::sha256_hex(all);
}

// --- VersionedStore ---------------------------------------------------------

VersionedStore::VersionedStore(VersionedStore&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  dir_ = std::move(other.dir_);
  records_ = std::move(other.records_);
  ids_ = std::move(other.ids_);
  monthly_ = std::move(other.monthly_);
  monthly_keys_ = std::move(other.monthly_keys_);
  provinces_ = std::move(other.provinces_);
}

VersionedStore& VersionedStore::operator=(VersionedStore&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    dir_ = std::move(other.dir_);
    records_ = std::move(other.records_);
    ids_ = std::move(other.ids_);
    monthly_ = std::move(other.monthly_);
    monthly_keys_ = std::move(other.monthly_keys_);
    provinces_ = std::move(other.provinces_);
  }
  return *this;
}

VersionedStore VersionedStore::open(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  VersionedStore store;
  const auto records_file = dir / "records.log";
  const auto monthly_file = dir / "monthly.log";
  if (std::filesystem::exists(records_file)) {
    const auto recs = read_linelist(records_file);
    const auto report = store.ingest(recs);
    if (!report.rejections.empty()) {
      throw ValidationError(fmt::format("store log '{}' is corrupt: {}", records_file.string(),
                                        report.rejections.front().reason));
    }
  }
  if (std::filesystem::exists(monthly_file)) {
    const auto months = read_monthly(monthly_file);
    const auto report = store.ingest_monthly(months);
    if (!report.rejections.empty()) {
      throw ValidationError(fmt::format("store log '{}' is corrupt: {}", monthly_file.string(),
                                        report.rejections.front().reason));
    }
  }
  store.dir_ = dir;
  return store;
}

IngestReport VersionedStore::ingest(std::span<const CaseRecord> records) {
  std::unique_lock lock(mutex_);
  IngestReport report;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::string reason;
    if (!valid_token(r.record_id)) {
      reason = "record_id must be non-empty and free of delimiters";
    } else if (!valid_token(r.province)) {
      reason = "province must be non-empty and free of delimiters";
    } else if (!r.onset.ok() || !r.arrival.ok()) {
      reason = "invalid calendar date";
    } else if (std::chrono::sys_days{r.arrival} < std::chrono::sys_days{r.onset}) {
      reason = fmt::format("arrival {} precedes onset {}", format_date(r.arrival),
                           format_date(r.onset));
    } else if (ids_.contains(r.record_id)) {
      reason = "duplicate record_id";
    }
    if (!reason.empty()) {
      report.rejections.push_back({i, r.record_id, std::move(reason)});
      continue;
    }
    ids_.insert(r.record_id);
    provinces_.insert(r.province);
    records_.push_back(r);
    if (dir_) lines.push_back(format_record(r));
    ++report.ingested;
  }
  if (dir_ && !lines.empty()) append_lines(*dir_ / "records.log", kLinelistHeader, lines);
  return report;
}

IngestReport VersionedStore::ingest_monthly(std::span<const MonthlyCount> counts) {
  std::unique_lock lock(mutex_);
  IngestReport report;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& m = counts[i];
    const std::string key = fmt::format("{}/{}-{:02d}", m.province, m.year, m.month);
    std::string reason;
    if (!valid_token(m.province)) {
      reason = "province must be non-empty and free of delimiters";
    } else if (m.month < 1 || m.month > 12) {
      reason = "month out of 1..12";
    } else if (m.count < 0) {
      reason = "negative count";
    } else if (monthly_keys_.contains({m.province, m.year, m.month})) {
      reason = "duplicate province-month";
    }
    if (!reason.empty()) {
      report.rejections.push_back({i, key, std::move(reason)});
      continue;
    }
    monthly_keys_.insert({m.province, m.year, m.month});
    provinces_.insert(m.province);
    monthly_.push_back(m);
    if (dir_) lines.push_back(format_monthly(m));
    ++report.ingested;
  }
  if (dir_ && !lines.empty()) append_lines(*dir_ / "monthly.log", kMonthlyHeader, lines);
  return report;
}

Snapshot VersionedStore::filtered(std::optional<Date> as_of,
                                  std::optional<Diagnosis> filter) const {
  std::shared_lock lock(mutex_);
  auto out = std::make_shared<std::vector<CaseRecord>>();
  Date latest = as_of.value_or(Date{std::chrono::year{kEpochYear}, std::chrono::month{1},
                                    std::chrono::day{1}});
  for (const auto& r : records_) {
    if (filter && r.diagnosis != *filter) continue;
    if (as_of) {
      if (std::chrono::sys_days{r.arrival} > std::chrono::sys_days{*as_of}) continue;
    } else if (std::chrono::sys_days{r.arrival} > std::chrono::sys_days{latest}) {
      latest = r.arrival;
    }
    out->push_back(r);
  }
  return Snapshot(latest, std::move(out), std::make_shared<const std::set<std::string>>(provinces_));
}

Snapshot VersionedStore::as_of(const Date& d, std::optional<Diagnosis> filter) const {
  return filtered(d, filter);
}

Snapshot VersionedStore::everything(std::optional<Diagnosis> filter) const {
  return filtered(std::nullopt, filter);
}

std::vector<MonthlyCount> VersionedStore::monthly() const {
  std::shared_lock lock(mutex_);
  return monthly_;
}

std::size_t VersionedStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::set<std::string> VersionedStore::provinces() const {
  std::shared_lock lock(mutex_);
  return provinces_;
}

std::optional<Date> VersionedStore::earliest_arrival() const {
  std::shared_lock lock(mutex_);
  std::optional<Date> best;
  for (const auto& r : records_) {
    if (!best || std::chrono::sys_days{r.arrival} < std::chrono::sys_days{*best}) best = r.arrival;
  }
  return best;
}

// --- file formats -----------------------------------------------------------

std::vector<CaseRecord> parse_linelist(std::span<const std::string> lines,
                                       std::string_view source) {
  if (lines.empty()) throw ParseError(fmt::format("{}: missing header line", source));
  if (lines.front() != kLinelistHeader) {
    throw ParseError(fmt::format("{}: line 1: expected header '{}'", source, kLinelistHeader));
  }
  std::vector<CaseRecord> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto f = io::split_fields(line);
    try {
      if (f.size() != 5) {
        throw ParseError(fmt::format("expected 5 fields, found {}", f.size()));
      }
      CaseRecord r;
      r.record_id = std::string(f[0]);
      r.province = std::string(f[1]);
      r.onset = parse_date(f[2]);
      r.diagnosis = parse_diagnosis(f[3]);
      r.arrival = parse_date(f[4]);
      out.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: line {}: {}", source, i + 1, e.what()));
    }
  }
  return out;
}

std::vector<CaseRecord> read_linelist(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  return parse_linelist(lines, path.string());
}

std::vector<MonthlyCount> read_monthly(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  const std::string source = path.string();
  if (lines.empty()) throw ParseError(fmt::format("{}: missing header line", source));
  if (lines.front() != kMonthlyHeader) {
    throw ParseError(fmt::format("{}: line 1: expected header '{}'", source, kMonthlyHeader));
  }
  std::vector<MonthlyCount> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_fields(lines[i]);
    try {
      if (f.size() != 4) throw ParseError(fmt::format("expected 4 fields, found {}", f.size()));
      MonthlyCount m;
      m.province = std::string(f[0]);
      m.year = static_cast<int>(io::parse_integer(f[1], "year"));
      m.month = static_cast<int>(io::parse_integer(f[2], "month"));
      m.count = io::parse_integer(f[3], "count");
      if (m.month < 1 || m.month > 12) throw ParseError("month out of 1..12");
      if (m.count < 0) throw ParseError("negative count");
      out.push_back(std::move(m));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: line {}: {}", source, i + 1, e.what()));
    }
  }
  return out;
}

std::string write_linelist(std::span<const CaseRecord> records) {
  std::string out(kLinelistHeader);
  out += '\n';
  for (const auto& r : records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

// --- reporting delays -------------------------------------------------------

std::vector<double> delay_quantiles(const Snapshot& snapshot, std::span<const double> probs) {
  if (snapshot.empty()) throw ValidationError("delay_quantiles: empty snapshot");
  std::vector<double> weeks;
  weeks.reserve(snapshot.size());
  for (const auto& r : snapshot.records()) {
    weeks.push_back(static_cast<double>(days_between(r.onset, r.arrival)) / 7.0);
  }
  return stats::quantiles(std::move(weeks), probs);
}

std::string_view to_string(DelayFamily f) {
  switch (f) {
    case DelayFamily::LogNormal: return "lognormal";
    case DelayFamily::Point: return "point";
    case DelayFamily::Empirical: return "empirical";
    case DelayFamily::None: return "none";
  }
  return "?";
}

DelayFamily parse_delay_family(std::string_view text) {
  if (text == "lognormal") return DelayFamily::LogNormal;
  if (text == "point") return DelayFamily::Point;
  if (text == "empirical") return DelayFamily::Empirical;
  if (text == "none") return DelayFamily::None;
  throw ValidationError(fmt::format("unknown delay family '{}'", text));
}

void DelayModel::validate() const {
  if (!(min_weeks >= 0.0) || !(max_weeks >= min_weeks)) {
    throw ValidationError("delay model: require 0 <= min_weeks <= max_weeks");
  }
  switch (family) {
    case DelayFamily::LogNormal:
      if (!(median_weeks > 0.0) || !(p75_weeks > median_weeks) || !std::isfinite(p75_weeks)) {
        throw ValidationError("delay model: lognormal requires 0 < median_weeks < p75_weeks");
      }
      break;
    case DelayFamily::Point:
      if (!(point_weeks >= 0.0) || !std::isfinite(point_weeks)) {
        throw ValidationError("delay model: point_weeks must be finite and >= 0");
      }
      break;
    case DelayFamily::Empirical:
      if (sample_weeks.empty()) throw ValidationError("delay model: empty empirical sample");
      for (double w : sample_weeks) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
          throw ValidationError("delay model: empirical delays must be finite and >= 0");
        }
      }
      break;
    case DelayFamily::None:
      break;
  }
}

std::vector<CaseRecord> inject_delays(std::span<const CaseRecord> complete,
                                      const DelayModel& model, std::uint64_t seed) {
  model.validate();
  std::vector<CaseRecord> out(complete.begin(), complete.end());
  if (model.family == DelayFamily::None) {
    for (auto& r : out) r.arrival = r.onset;
    return out;
  }
  std::mt19937_64 rng(seed);
  const double mu = std::log(model.median_weeks);
  const double sigma = model.family == DelayFamily::LogNormal
                           ? std::log(model.p75_weeks / model.median_weeks) / kZ75
                           : 1.0;
  std::lognormal_distribution<double> lognormal(mu, sigma);
  std::uniform_int_distribution<std::size_t> pick(
      0, model.sample_weeks.empty() ? 0 : model.sample_weeks.size() - 1);
  const int min_days = static_cast<int>(std::lround(model.min_weeks * 7.0));
  const int max_days = static_cast<int>(std::lround(model.max_weeks * 7.0));
  for (auto& r : out) {
    double weeks = 0.0;
    switch (model.family) {
      case DelayFamily::LogNormal: weeks = lognormal(rng); break;
      case DelayFamily::Point: weeks = model.point_weeks; break;
      case DelayFamily::Empirical: weeks = model.sample_weeks[pick(rng)]; break;
      case DelayFamily::None: break;
    }
    const double raw_days = std::round(weeks * 7.0);
    const int delay =
        static_cast<int>(std::clamp(raw_days, static_cast<double>(min_days),
                                    static_cast<double>(max_days)));
    r.arrival = add_days(r.onset, delay);
  }
  return out;
}

}  // namespace denguecast
