#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "denguecast/series.hpp"
#include "denguecast/store.hpp"

namespace denguecast {

/// Coefficient on the growth ratio of `province` at `lag`.
struct CovariateTruth {
  std::string province;
  int lag = 1;
  double coefficient = 0.0;
};

/// Known parameters of the rate model for one province; the seasonal
/// effect is a single cosine, which sums to zero over the 26 positions.
struct ModelTruth {
  std::string province;
  double intercept = 0.0;
  double amplitude = 0.0;
  double peak = 0.0;  // seasonal position of the maximum
  std::vector<CovariateTruth> covariates;
  double initial = 100.0;

  double seasonal(double position) const;
};

struct ModelSimulationSpec {
  std::vector<ModelTruth> provinces;
  int start_year = 1990;
  int years = 20;
  double offset_floor = 0.5;
  std::uint64_t seed = 0;
};

/// Draws y_t ~ Poisson(max(y_{t-1}, floor) * exp(intercept + seasonal +
/// sum coefficient * log((y_{t-k,j}+1)/(y_{t-k-1,j}+1)))) jointly for all
/// provinces. The first two biweeks of every series are set to `initial`.
/// Series cover `years` whole calendar years from `start_year`.
SeriesMap simulate_model_series(const ModelSimulationSpec& spec);

struct OutbreakSpec {
  int provinces = 10;
  int start_year = 1995;
  int years = 20;
  double mean_level = 30.0;       // median biweekly DHF cases per province
  double seasonal_amplitude = 1.2;
  double year_sd = 0.35;          // log-scale year-to-year variation (shared + own)
  double dhf_fraction = 0.7;      // remaining cases split between DF and DSS
  std::uint64_t seed = 0;
};

/// Codes P01, P02, ...
std::string synthetic_province_code(int index);

/// Seasonal outbreaks with regional and provincial year effects. Records
/// arrive on their onset day (complete data); use `inject_delays` for a
/// reporting-delay arm.
std::vector<CaseRecord> synthesize_outbreaks(const OutbreakSpec& spec);

}  // namespace denguecast
