#include "denguecast/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/stats.hpp"
#include "denguecast/text_io.hpp"

namespace denguecast {

void SimulationSettings::validate() const {
  if (horizon < 1) throw ValidationError("simulation: horizon must be >= 1");
  if (n_sims < 1) throw ValidationError("simulation: n_sims must be >= 1");
  if (!(explosive_cap > 0.0)) throw ValidationError("simulation: explosive_cap must be positive");
}

std::vector<double> TrajectorySet::cell(std::size_t province, int step) const {
  std::vector<double> out(static_cast<std::size_t>(n_sims));
  for (int s = 0; s < n_sims; ++s) out[static_cast<std::size_t>(s)] = count(s, province, step);
  return out;
}

double TrajectorySet::explosive_fraction(std::size_t province) const {
  if (n_sims == 0) return 0.0;
  int n = 0;
  for (int s = 0; s < n_sims; ++s) n += is_explosive(s, province) ? 1 : 0;
  return static_cast<double>(n) / n_sims;
}

double draw_poisson(double mean, std::mt19937_64& rng) {
  if (!std::isfinite(mean)) return std::numeric_limits<double>::infinity();
  if (mean <= 0.0) return 0.0;
  if (mean > 1e9) {
    std::normal_distribution<double> normal(mean, std::sqrt(mean));
    return std::max(0.0, std::round(normal(rng)));
  }
  std::poisson_distribution<long long> poisson(mean);
  return static_cast<double>(poisson(rng));
}

namespace {

/// Per-province state shared by all simulations.
struct ProvinceState {
  const ProvinceFit* fit = nullptr;
  const BiweekSeries* truncated = nullptr;
  const BiweekSeries* response = nullptr;
  const BiweekSeries* covariate = nullptr;
  bool smooth_covariates = true;
  int window = 1;
  std::vector<std::size_t> correlated;  // indices into the state vector
  std::vector<double> baseline;         // eta without covariates, per step
  Eigen::VectorXd alpha;
};

class PathView {
 public:
  PathView(const std::vector<ProvinceState>& states, AbsoluteBiweek origin, int horizon,
           const std::vector<double>& sims)
      : states_(states), origin_(origin), horizon_(horizon), sims_(sims) {}

  double raw(std::size_t p, AbsoluteBiweek u) const {
    if (u <= origin_) return states_[p].truncated->at(u);
    return sims_[p * static_cast<std::size_t>(horizon_) + static_cast<std::size_t>(u - origin_ - 1)];
  }

  double trailing(std::size_t p, AbsoluteBiweek u) const {
    const int w = states_[p].window;
    double sum = 0.0;
    for (int k = 0; k < w; ++k) sum += raw(p, u - k);
    return sum / w;
  }

  double response(std::size_t p, AbsoluteBiweek u) const {
    return u <= origin_ ? states_[p].response->at(u) : trailing(p, u);
  }

  double covariate(std::size_t p, AbsoluteBiweek u) const {
    if (u <= origin_) return states_[p].covariate->at(u);
    return states_[p].smooth_covariates ? trailing(p, u) : raw(p, u);
  }

 private:
  const std::vector<ProvinceState>& states_;
  AbsoluteBiweek origin_;
  int horizon_;
  const std::vector<double>& sims_;
};

}  // namespace

TrajectorySet simulate_paths(std::span<const ProvinceFit> fits, const SeriesMap& raw,
                             const SimulationSettings& settings) {
  settings.validate();
  if (fits.empty()) throw ValidationError("simulate_paths: no fitted provinces");
  const Date date = fits.front().analysis_date;
  const AbsoluteBiweek origin = fits.front().train_last;
  std::map<std::string, std::size_t> position;
  for (std::size_t p = 0; p < fits.size(); ++p) {
    const auto& f = fits[p];
    if (f.analysis_date != date || f.train_last != origin) {
      throw ValidationError("simulate_paths: fits do not share an analysis date and origin");
    }
    if (!f.usable()) {
      throw ValidationError(fmt::format("simulate_paths: fit for '{}' is unusable", f.province));
    }
    if (!position.emplace(f.province, p).second) {
      throw ValidationError(fmt::format("simulate_paths: duplicate province '{}'", f.province));
    }
  }

  std::vector<ModelInputs> inputs;
  inputs.reserve(fits.size());
  std::vector<ProvinceState> states(fits.size());
  for (std::size_t p = 0; p < fits.size(); ++p) {
    const auto& f = fits[p];
    SeriesMap subset;
    auto add = [&](const std::string& code) {
      auto it = raw.find(code);
      if (it == raw.end()) {
        throw ValidationError(fmt::format("simulate_paths: no history for '{}'", code));
      }
      subset.emplace(code, it->second);
    };
    add(f.province);
    for (const auto& j : f.correlated) {
      if (!position.contains(j)) {
        throw ValidationError(fmt::format(
            "simulate_paths: '{}' depends on '{}', which is not simulated", f.province, j));
      }
      add(j);
    }
    inputs.push_back(prepare_inputs(subset, date, f.config));
    if (inputs.back().origin != origin) {
      throw ValidationError("simulate_paths: fit origin disagrees with its reporting lag");
    }
  }
  for (std::size_t p = 0; p < fits.size(); ++p) {
    const auto& f = fits[p];
    auto& st = states[p];
    st.fit = &f;
    st.truncated = &inputs[p].truncated.at(f.province);
    st.response = &inputs[p].response.at(f.province);
    st.covariate = &inputs[p].covariate.at(f.province);
    st.smooth_covariates = f.config.smooth_covariate_series;
    st.window = f.config.smoothing_window;
    if (st.truncated->start > origin - (st.window - 1)) {
      throw ValidationError(
          fmt::format("simulate_paths: '{}' history is shorter than the smoothing window",
                      f.province));
    }
    for (const auto& j : f.correlated) st.correlated.push_back(position.at(j));
    for (int h = 1; h <= settings.horizon; ++h) st.baseline.push_back(f.baseline_log_rate(origin + h));
    st.alpha = f.covariate_coefficients();
  }
  // Covariate series of neighbours are read through each neighbour's own
  // state; check they reach back far enough once, up front.
  for (const auto& st : states) {
    for (std::size_t j : st.correlated) {
      const int deepest = st.fit->config.max_lag() + 1;
      if (states[j].covariate->start > origin + 1 - deepest) {
        throw ValidationError(fmt::format("simulate_paths: '{}' lacks lagged history",
                                          states[j].fit->province));
      }
    }
  }

  TrajectorySet out;
  out.analysis_date = date;
  out.origin = origin;
  out.horizon = settings.horizon;
  out.n_sims = settings.n_sims;
  out.seed = settings.seed;
  for (const auto& f : fits) out.provinces.push_back(f.province);
  const std::size_t np = fits.size();
  const auto H = static_cast<std::size_t>(settings.horizon);
  out.counts.assign(static_cast<std::size_t>(settings.n_sims) * np * H, 0.0);
  out.explosive.assign(static_cast<std::size_t>(settings.n_sims) * np, 0);

  std::vector<double> sims(np * H, 0.0);
  std::vector<double> means(np, 0.0);
  const PathView view(states, origin, settings.horizon, sims);
  const auto seed_lo = static_cast<std::uint32_t>(settings.seed & 0xffffffffu);
  const auto seed_hi = static_cast<std::uint32_t>(settings.seed >> 32);

  for (int s = 0; s < settings.n_sims; ++s) {
    std::seed_seq seq{seed_lo, seed_hi, static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    std::fill(sims.begin(), sims.end(), 0.0);
    for (int h = 1; h <= settings.horizon; ++h) {
      const AbsoluteBiweek t = origin + h;
      for (std::size_t p = 0; p < np; ++p) {
        const auto& st = states[p];
        double eta = st.baseline[static_cast<std::size_t>(h - 1)];
        Eigen::Index c = 0;
        for (std::size_t j : st.correlated) {
          for (int k : st.fit->config.lags) {
            eta += st.alpha(c++) *
                   growth_ratio(view.covariate(j, t - k), view.covariate(j, t - k - 1));
          }
        }
        const double offset = floored_offset(view.response(p, t - 1), st.fit->config.offset_floor);
        double mean = offset * std::exp(eta);
        if (std::isnan(mean)) mean = std::numeric_limits<double>::infinity();
        means[p] = mean;
      }
      for (std::size_t p = 0; p < np; ++p) {
        const double y = draw_poisson(means[p], rng);
        sims[p * H + static_cast<std::size_t>(h - 1)] = y;
        out.counts[out.index(s, p, h)] = y;
        if (!(means[p] <= settings.explosive_cap)) {
          out.explosive[static_cast<std::size_t>(s) * np + p] = 1;
        }
      }
    }
  }
  return out;
}

// --- reduction --------------------------------------------------------------

const Interval& ForecastRecord::interval(double level) const {
  for (const auto& i : intervals) {
    if (std::abs(i.level - level) < 1e-12) return i;
  }
  throw ValidationError(fmt::format("forecast has no {} interval", level_label(level)));
}

std::string level_label(double level) {
  return io::format_number(std::round(level * 1e8) / 1e6);
}

std::vector<ForecastRecord> reduce_to_forecast(const TrajectorySet& traj,
                                               const ReduceOptions& options) {
  if (traj.n_sims < 100) {
    throw ValidationError(
        fmt::format("reduce_to_forecast: need at least 100 simulations, got {}", traj.n_sims));
  }
  for (double level : options.levels) {
    if (!(level > 0.0 && level < 1.0)) {
      throw ValidationError("reduce_to_forecast: interval levels must lie in (0, 1)");
    }
  }
  std::vector<ForecastRecord> out;
  for (std::size_t p = 0; p < traj.province_count(); ++p) {
    const double frac = traj.explosive_fraction(p);
    for (int h = 1; h <= traj.horizon; ++h) {
      auto values = traj.cell(p, h);
      std::sort(values.begin(), values.end());
      ForecastRecord r;
      r.province = traj.provinces[p];
      r.analysis_date = traj.analysis_date;
      r.origin = traj.origin;
      r.step = h;
      r.target = traj.origin + h;
      if (options.point == PointReduction::Median) {
        r.point = stats::quantile_sorted(values, 0.5);
      } else {
        r.point = std::accumulate(values.begin(), values.end(), 0.0) /
                  static_cast<double>(values.size());
      }
      for (double level : options.levels) {
        const double tail = (1.0 - level) / 2.0;
        r.intervals.push_back({level, stats::quantile_sorted(values, tail),
                               stats::quantile_sorted(values, 1.0 - tail)});
      }
      r.n_sims = traj.n_sims;
      r.seed = traj.seed;
      r.explosive_fraction = frac;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// --- text format ------------------------------------------------------------

std::uint64_t parse_seed(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(fmt::format("invalid seed '{}'", text));
  }
  return v;
}

std::string write_forecasts(std::span<const ForecastRecord> records) {
  std::vector<double> levels{0.95};
  if (!records.empty()) {
    levels.clear();
    for (const auto& i : records.front().intervals) levels.push_back(i.level);
  }
  std::string out = "province,analysis_date,origin,step,target_biweek,point";
  for (double l : levels) out += fmt::format(",lo{0},hi{0}", level_label(l));
  out += ",n_sims,seed,explosive_fraction\n";
  for (const auto& r : records) {
    if (r.intervals.size() != levels.size()) {
      throw ValidationError("write_forecasts: records disagree on interval levels");
    }
    out += fmt::format("{},{},{},{},{},{}", r.province, format_date(r.analysis_date),
                       format_biweek(r.origin), r.step, format_biweek(r.target),
                       io::format_number(r.point));
    for (const auto& i : r.intervals) {
      out += fmt::format(",{},{}", io::format_number(i.lower), io::format_number(i.upper));
    }
    out += fmt::format(",{},{},{}\n", r.n_sims, r.seed, io::format_number(r.explosive_fraction));
  }
  return out;
}

std::vector<ForecastRecord> parse_forecasts(std::span<const std::string> lines,
                                            std::string_view source) {
  if (lines.empty()) throw ParseError(fmt::format("{}: missing header", source));
  const auto header = io::split_fields(lines.front());
  const std::vector<std::string_view> head{"province", "analysis_date", "origin",
                                           "step",     "target_biweek", "point"};
  const std::vector<std::string_view> tail{"n_sims", "seed", "explosive_fraction"};
  const bool shape_ok = header.size() >= head.size() + tail.size() &&
                        (header.size() - head.size() - tail.size()) % 2 == 0 &&
                        std::equal(head.begin(), head.end(), header.begin()) &&
                        std::equal(tail.begin(), tail.end(), header.end() - 3);
  if (!shape_ok) throw ParseError(fmt::format("{}: line 1: unexpected forecast header", source));
  std::vector<double> levels;
  for (std::size_t c = head.size(); c + tail.size() < header.size(); c += 2) {
    const auto lo = header[c];
    const auto hi = header[c + 1];
    if (!lo.starts_with("lo") || !hi.starts_with("hi") || lo.substr(2) != hi.substr(2)) {
      throw ParseError(fmt::format("{}: line 1: malformed interval columns", source));
    }
    levels.push_back(io::parse_number(lo.substr(2), "interval level") / 100.0);
  }

  std::vector<ForecastRecord> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = io::split_fields(lines[n]);
    try {
      if (f.size() != header.size()) throw ParseError("wrong number of fields");
      ForecastRecord r;
      r.province = std::string(f[0]);
      r.analysis_date = parse_date(f[1]);
      r.origin = parse_biweek(f[2]);
      r.step = static_cast<int>(io::parse_integer(f[3], "step"));
      r.target = parse_biweek(f[4]);
      r.point = io::parse_number(f[5], "point");
      for (std::size_t k = 0; k < levels.size(); ++k) {
        r.intervals.push_back({levels[k], io::parse_number(f[6 + 2 * k], "lower bound"),
                               io::parse_number(f[7 + 2 * k], "upper bound")});
      }
      r.n_sims = static_cast<int>(io::parse_integer(f[f.size() - 3], "n_sims"));
      r.seed = parse_seed(f[f.size() - 2]);
      r.explosive_fraction = io::parse_number(f[f.size() - 1], "explosive_fraction");
      out.push_back(std::move(r));
    } catch (const ValidationError& e) {
      throw ParseError(fmt::format("{}: line {}: {}", source, n + 1, e.what()));
    }
  }
  return out;
}

std::vector<ForecastRecord> read_forecasts(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  return parse_forecasts(lines, path.string());
}

}  // namespace denguecast
