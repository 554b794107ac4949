#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "denguecast/pgam.hpp"
#include "denguecast/province_model.hpp"
#include "denguecast/series.hpp"
#include "denguecast/simulator.hpp"
#include "denguecast/spline_basis.hpp"
#include "denguecast/synthetic.hpp"

using namespace denguecast;

namespace {

FitProblem seasonal_problem(int years) {
  std::mt19937_64 rng(1);
  const int n = 26 * years;
  std::vector<double> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = i % 26;
  const auto c = absorb_centering(build_cyclic_basis(pos, cyclic_spec(8)));
  std::normal_distribution<double> z(0.0, 0.3);
  Eigen::MatrixXd cov(n, 3);
  FitProblem p;
  p.y.resize(n);
  p.offset = Eigen::VectorXd::Constant(n, 50.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) cov(i, j) = z(rng);
    const double eta = 0.8 * std::cos(2 * M_PI * (i % 26) / 26.0) + 0.3 * cov(i, 0);
    p.y(i) = std::poisson_distribution<int>(50.0 * std::exp(eta))(rng);
  }
  p.blocks.push_back({"intercept", Eigen::MatrixXd::Ones(n, 1), std::nullopt, true});
  p.blocks.push_back({"seasonal", c.design, c.penalty, false});
  p.blocks.push_back({"covariates", cov, std::nullopt, false});
  p.lambdas = {1.0};
  return p;
}

SeriesMap model_series(int provinces, int years) {
  ModelSimulationSpec spec;
  spec.years = years;
  spec.seed = 3;
  for (int i = 0; i < provinces; ++i) {
    spec.provinces.push_back({synthetic_province_code(i + 1), 0.0, 0.5 + 0.05 * i, 10.0 + i, {}, 300.0});
  }
  return simulate_model_series(spec);
}

Date date_after(const SeriesMap& m) {
  return biweek_to_interval(from_absolute(m.begin()->second.last() + 1)).first;
}

void BM_CyclicBasis(benchmark::State& state) {
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 26);
  for (auto _ : state) benchmark::DoNotOptimize(build_cyclic_basis(x, cyclic_spec(8)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CyclicBasis)->Arg(520)->Arg(1222);

void BM_PirlsFit(benchmark::State& state) {
  const auto p = seasonal_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_pirls(p));
}
BENCHMARK(BM_PirlsFit)->Arg(10)->Arg(20)->Arg(47)->Unit(benchmark::kMicrosecond);

void BM_SelectLambda(benchmark::State& state) {
  const auto p = seasonal_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(select_lambda(p));
}
BENCHMARK(BM_SelectLambda)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_FitProvinces(benchmark::State& state) {
  const auto raw = model_series(static_cast<int>(state.range(0)), 20);
  const Date d = date_after(raw);
  for (auto _ : state) benchmark::DoNotOptimize(fit_provinces(raw, d, ModelConfig{}));
}
BENCHMARK(BM_FitProvinces)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SimulatePaths(benchmark::State& state) {
  const auto raw = model_series(10, 20);
  const auto fits = fit_provinces(raw, date_after(raw), ModelConfig{}).fits;
  SimulationSettings s;
  s.n_sims = static_cast<int>(state.range(0));
  s.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(fits, raw, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePaths)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_InterpolateMonthly(benchmark::State& state) {
  std::vector<MonthlyCount> months;
  for (int i = 0; i < 12 * state.range(0); ++i) months.push_back({"P01", 1968 + i / 12, 1 + i % 12, 100 + i % 37});
  for (auto _ : state) benchmark::DoNotOptimize(interpolate_monthly(months));
}
BENCHMARK(BM_InterpolateMonthly)->Arg(30);

}  // namespace

BENCHMARK_MAIN();
