#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "nsf/analysis.hpp"

using namespace nsf;

namespace {

constexpr double pi = std::numbers::pi;

ModelParams forced_model() {
  ModelParams mp;
  mp.force = make_force({"fourier1", {{"amplitude", 0.1}, {"wavenumber", 1.0}}}, 1.0, 1.0);
  mp.theta0 = make_theta0({"fourier1", {{"mean", 1.0}, {"amplitude", 0.5}, {"wavenumber", 1.0}}}, 1.0, 1.0);
  return mp;
}

VectorField swirl(const Grid& g, double a) {
  VectorField v = sample_faces(g, [a](Vec2 p) {
    return Vec2{a * std::sin(pi * p.x) * std::cos(pi * p.y), -a * std::cos(pi * p.x) * std::sin(pi * p.y)};
  });
  impose_no_penetration(v, g);
  return v;
}

void BM_Continuity(benchmark::State& state) {
  const Grid g(1.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const ModelParams mp;
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const VectorField v = swirl(g, 0.02);
  SolveOptions opts;
  opts.continuity_method = state.range(1) ? ContinuityMethod::Newton : ContinuityMethod::Picard;
  for (auto _ : state) benchmark::DoNotOptimize(solve_continuity(v, mp, ap, K, g, opts));
  state.SetLabel(state.range(1) ? "newton" : "picard");
}
BENCHMARK(BM_Continuity)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_Momentum(benchmark::State& state) {
  const Grid g(1.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const ModelParams mp = forced_model();
  const TruncationK K(10.0);
  const VectorField v = swirl(g, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(solve_momentum(g.cells(1.0), g.cells(0.0), v, 1.0, mp, K, g, {}));
}
BENCHMARK(BM_Momentum)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Entropy(benchmark::State& state) {
  const Grid g(1.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const ModelParams mp = forced_model();
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const VectorField v = swirl(g, 0.01);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_entropy(g.cells(1.0), v, g.cells(0.0), 1.0, mp, ap, K, g, {}));
}
BENCHMARK(BM_Entropy)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Mechanics(benchmark::State& state) {
  const Grid g(1.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const ModelParams mp = forced_model();
  const ApproxParams ap;
  const TruncationK K(ap.k);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_mechanics(g.cells(1.0), g.cells(0.0), g.faces(), 1.0, mp, ap, K, g, {}));
}
BENCHMARK(BM_Mechanics)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Helmholtz(benchmark::State& state) {
  const Grid g(1.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const VectorField v = swirl(g, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(helmholtz_decompose(v, g));
}
BENCHMARK(BM_Helmholtz)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_CoupledForced(benchmark::State& state) {
  const Grid g(1.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const ModelParams mp = forced_model();
  const ApproxParams ap;
  const TruncationK K(ap.k);
  int iterations = 0;
  for (auto _ : state) {
    const CoupledSolution sol = solve_coupled(rest_state(g, 1.0), {}, mp, ap, K, g, {});
    iterations = sol.report.total_iterations;
    benchmark::DoNotOptimize(sol);
  }
  state.counters["outer_iterations"] = iterations;
}
BENCHMARK(BM_CoupledForced)->Arg(16)->Arg(32)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
BENCHMARK_MAIN();
