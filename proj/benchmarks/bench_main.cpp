#include <benchmark/benchmark.h>

#include "hpencil/krein.hpp"
#include "hpencil/pencil_resolvent.hpp"
#include "hpencil/potential.hpp"
#include "hpencil/radial3d.hpp"
#include "hpencil/scattering1d.hpp"
#include "hpencil/spectral.hpp"

using namespace hp;

namespace {

PotentialGrid random_q(int dim, double R, double step) {
  PotentialSpec s;
  s.kind = potential_spec::RandomHermitian{1.0, 0.6, 17, 1.0};
  s.dim = dim;
  s.support_radius = R;
  s.step = step;
  return build_potential(s);
}

}  // namespace

// Jost solution over [0, R], matrix size as the argument.
static void BM_JostSolution(benchmark::State& state) {
  const auto q = random_q(static_cast<int>(state.range(0)), 5.0, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(jost_solution(q, Wavenumber::real(2.0), 0.7));
  }
}
BENCHMARK(BM_JostSolution)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_PencilJost(benchmark::State& state) {
  const auto q = random_q(static_cast<int>(state.range(0)), 5.0, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pencil_jost(q, Wavenumber::upper({1.5, 0.4}), -1.0));
  }
}
BENCHMARK(BM_PencilJost)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Density(benchmark::State& state) {
  const auto q = random_q(1, state.range(0), 0.05);
  const auto f = SourceVector::indicator(1.0, q.step(), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(density(q, f, Wavenumber::real(1.5), 0.3));
  }
}
BENCHMARK(BM_Density)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_EntropyScan(benchmark::State& state) {
  const auto q = random_q(1, 10.0, 0.05);
  const auto f = SourceVector::indicator(1.0, q.step(), 1);
  ScanOptions opt;
  opt.n_lambda = opt.n_t = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(entropy_scan(q, f, Rectangle{}, opt));
  }
}
BENCHMARK(BM_EntropyScan)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_KreinTransform(benchmark::State& state) {
  const auto q = random_q(2, 3.0, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transform_equivalence(q, cplx(1.2, 0.3), 0.5));
  }
}
BENCHMARK(BM_KreinTransform)->Unit(benchmark::kMillisecond);

static void BM_PencilSolve(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto g = shipped_grid(ShippedPotential::Cosine, 40.0, N);
  Vector f = Vector::Ones(g.unknowns());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_pencil(g, 1.0, cplx(0.5, 1.0), f));
  }
}
BENCHMARK(BM_PencilSolve)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_CombesThomasFit(benchmark::State& state) {
  const auto g = shipped_grid(ShippedPotential::SineSum, 40.0, 4096);
  std::vector<double> seps;
  for (int s = 2; s <= 34; s += 2) seps.push_back(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(combes_thomas_fit(g, 1.0, cplx(0.5, 1.0), seps));
  }
}
BENCHMARK(BM_CombesThomasFit)->Unit(benchmark::kMillisecond);

static void BM_Twist(benchmark::State& state) {
  const auto L = mode_layout(0.66, static_cast<int>(state.range(0)));
  const auto v = CouplingMatrixFunction::dipole(L, 1.0, 0.95);
  TwistOptions opt;
  opt.r_max = 1e3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(twist_experiment(L, v, Wavenumber::upper({0.0, 0.5}), -2.0, opt));
  }
}
BENCHMARK(BM_Twist)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
