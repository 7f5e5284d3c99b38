// Serial reference kernels against their OpenMP counterparts.
// EFS_THREADS caps the OpenMP side; the reference side is always one thread.

#include <benchmark/benchmark.h>

#include <random>

#include "efs/analysis.hpp"
#include "efs/greedy.hpp"
#include "efs/parallel.hpp"
#include "efs/simlab.hpp"
#include "efs/weights.hpp"

using namespace efs;

namespace {

struct Problem {
  DesignMatrix design;
  Eigen::VectorXd f;
  Eigen::VectorXd y;
};

Problem make_problem(int n, int p) {
  DesignMatrix d = gen_banded_gaussian(n, p, 0.5, 1);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta.head(std::min(10, p)).setOnes();
  Eigen::VectorXd f = d.x() * beta;
  std::mt19937_64 g(2);
  std::normal_distribution<double> z(0.0, 2.0);
  Eigen::VectorXd y = f;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += z(g);
  return {std::move(d), std::move(f), std::move(y)};
}

void BM_McWeights(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mc_weight_table(10, 10, 50, state.range(0), 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_McWeightsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::mc_weight_table(10, 10, 50, state.range(0), 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EnsembleFit(benchmark::State& state) {
  const Problem pr = make_problem(300, 50);
  const int ensemble = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(efs_ensemble_fit(pr.design, pr.y, 10, 9, ensemble, 4));
  state.SetItemsProcessed(state.iterations() * ensemble);
}

void BM_EnsembleFitSerial(benchmark::State& state) {
  const Problem pr = make_problem(300, 50);
  const int ensemble = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::efs_ensemble_fit(pr.design, pr.y, 10, 9, ensemble, 4));
  state.SetItemsProcessed(state.iterations() * ensemble);
}

PathFitter fs_path_fitter(int k) {
  return [k](const DesignMatrix& d, const Eigen::VectorXd& y, std::uint64_t) -> Eigen::MatrixXd {
    const Eigen::MatrixXd coef = greedy_path(GramSystem::build(d.x(), y), k, d.p(), nullptr).coef_path;
    return d.x() * coef;
  };
}

void BM_DfPath(benchmark::State& state) {
  const Problem pr = make_problem(300, 50);
  const PathFitter fitter = fs_path_fitter(20);
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_path(fitter, pr.design, pr.f, 4.0, state.range(0), 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DfPathSerial(benchmark::State& state) {
  const Problem pr = make_problem(300, 50);
  const PathFitter fitter = fs_path_fitter(20);
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::monte_carlo_path(fitter, pr.design, pr.f, 4.0, state.range(0), 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_McWeights)->Arg(20000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McWeightsSerial)->Arg(20000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleFit)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleFitSerial)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DfPath)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DfPathSerial)->Arg(200)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  apply_thread_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::AddCustomContext("omp_threads", std::to_string(max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
