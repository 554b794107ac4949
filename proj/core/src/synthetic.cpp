#include "denguecast/synthetic.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/province_model.hpp"
#include "denguecast/simulator.hpp"

namespace denguecast {

double ModelTruth::seasonal(double position) const {
  return amplitude * std::cos(2.0 * std::numbers::pi * (position - peak) / kBiweeksPerYear);
}

SeriesMap simulate_model_series(const ModelSimulationSpec& spec) {
  if (spec.provinces.empty()) throw ValidationError("simulate_model_series: no provinces");
  if (spec.years < 1) throw ValidationError("simulate_model_series: years must be >= 1");
  std::map<std::string, std::size_t> index;
  for (std::size_t p = 0; p < spec.provinces.size(); ++p) {
    if (!index.emplace(spec.provinces[p].province, p).second) {
      throw ValidationError("simulate_model_series: duplicate province");
    }
  }
  int max_lag = 1;
  for (const auto& t : spec.provinces) {
    for (const auto& c : t.covariates) {
      if (!index.contains(c.province)) {
        throw ValidationError(fmt::format("simulate_model_series: unknown covariate province '{}'",
                                          c.province));
      }
      if (c.lag < 1) throw ValidationError("simulate_model_series: lags must be >= 1");
      max_lag = std::max(max_lag, c.lag);
    }
  }

  const AbsoluteBiweek start = to_absolute({spec.start_year, 1});
  const int n = spec.years * kBiweeksPerYear;
  const std::size_t np = spec.provinces.size();
  std::vector<std::vector<double>> y(np, std::vector<double>(static_cast<std::size_t>(n), 0.0));
  std::mt19937_64 rng(spec.seed);
  const int burn = max_lag + 1;
  for (std::size_t p = 0; p < np; ++p) {
    for (int t = 0; t < std::min(burn, n); ++t) y[p][static_cast<std::size_t>(t)] = spec.provinces[p].initial;
  }
  std::vector<double> means(np);
  for (int t = burn; t < n; ++t) {
    const double pos = seasonal_position(start + t);
    for (std::size_t p = 0; p < np; ++p) {
      const auto& truth = spec.provinces[p];
      double eta = truth.intercept + truth.seasonal(pos);
      for (const auto& c : truth.covariates) {
        const auto& yj = y[index.at(c.province)];
        eta += c.coefficient * growth_ratio(yj[static_cast<std::size_t>(t - c.lag)],
                                            yj[static_cast<std::size_t>(t - c.lag - 1)]);
      }
      means[p] = floored_offset(y[p][static_cast<std::size_t>(t - 1)], spec.offset_floor) *
                 std::exp(eta);
    }
    for (std::size_t p = 0; p < np; ++p) y[p][static_cast<std::size_t>(t)] = draw_poisson(means[p], rng);
  }

  SeriesMap out;
  for (std::size_t p = 0; p < np; ++p) {
    BiweekSeries s;
    s.province = spec.provinces[p].province;
    s.start = start;
    s.values = std::move(y[p]);
    s.provenance.assign(s.values.size(), Provenance::Observed);
    out.emplace(s.province, std::move(s));
  }
  return out;
}

std::string synthetic_province_code(int index) { return fmt::format("P{:02}", index); }

std::vector<CaseRecord> synthesize_outbreaks(const OutbreakSpec& spec) {
  if (spec.provinces < 1 || spec.years < 1) {
    throw ValidationError("synthesize_outbreaks: provinces and years must be >= 1");
  }
  if (!(spec.mean_level > 0.0)) throw ValidationError("synthesize_outbreaks: mean_level must be positive");
  if (!(spec.dhf_fraction > 0.0 && spec.dhf_fraction <= 1.0)) {
    throw ValidationError("synthesize_outbreaks: dhf_fraction must lie in (0, 1]");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> standard(0.0, 1.0);
  const double split_sd = spec.year_sd / std::sqrt(2.0);

  std::vector<double> regional(static_cast<std::size_t>(spec.years));
  for (auto& r : regional) r = split_sd * standard(rng);

  struct Province {
    double log_level;
    double peak;
    std::vector<double> year_effect;
  };
  std::vector<Province> provinces;
  for (int i = 0; i < spec.provinces; ++i) {
    Province p;
    p.log_level = std::log(spec.mean_level) + 0.3 * standard(rng);
    p.peak = 13.0 + 1.5 * standard(rng);
    for (int yr = 0; yr < spec.years; ++yr) p.year_effect.push_back(split_sd * standard(rng));
    provinces.push_back(std::move(p));
  }

  std::vector<CaseRecord> out;
  const double other_ratio = (1.0 - spec.dhf_fraction) / spec.dhf_fraction;
  for (int i = 0; i < spec.provinces; ++i) {
    const auto& p = provinces[static_cast<std::size_t>(i)];
    const std::string code = synthetic_province_code(i + 1);
    long serial = 0;
    for (int yr = 0; yr < spec.years; ++yr) {
      for (int b = 1; b <= kBiweeksPerYear; ++b) {
        const double season = spec.seasonal_amplitude *
                              std::cos(2.0 * std::numbers::pi * (b - 1 - p.peak) / kBiweeksPerYear);
        const double mean = std::exp(p.log_level + season + regional[static_cast<std::size_t>(yr)] +
                                     p.year_effect[static_cast<std::size_t>(yr)]);
        const auto interval = biweek_to_interval({spec.start_year + yr, b});
        const int span = days_between(interval.first, interval.last);
        std::uniform_int_distribution<int> day(0, span);
        const auto dhf = static_cast<long>(draw_poisson(mean, rng));
        const auto other = static_cast<long>(draw_poisson(mean * other_ratio, rng));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (long c = 0; c < dhf + other; ++c) {
          CaseRecord r;
          r.record_id = fmt::format("{}-{:07}", code, ++serial);
          r.province = code;
          r.onset = add_days(interval.first, day(rng));
          r.diagnosis = c < dhf ? Diagnosis::DHF : (unit(rng) < 0.1 ? Diagnosis::DSS : Diagnosis::DF);
          r.arrival = r.onset;
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

}  // namespace denguecast
