// Microbenchmarks: per-step cost of each scheme, matrix_exp, KS distance.

#include <benchmark/benchmark.h>

#include <vector>

#include "shmc/experiments.hpp"
#include "shmc/integrators.hpp"
#include "shmc/metrics.hpp"
#include "shmc/operator_lab.hpp"

namespace {

using namespace shmc;

void BM_Step(benchmark::State& st) {
  const auto scheme = static_cast<Scheme>(st.range(0));
  ModelConfig m;
  if (st.range(1) == 1) m.kind = ModelKind::kLogistic2d;
  const PotentialPtr pot = build_model(m);
  const BoundGradient grad(*pot);
  Stepper stepper(IntegratorSpec(scheme, 0.01, 5.0, MassMatrix::identity(pot->dim())));
  RngStream rng(1);
  State z(Vector::Zero(pot->dim()), Vector::Constant(pot->dim(), 0.1));
  for (auto _ : st) {
    stepper.step(z, grad, rng);
    benchmark::DoNotOptimize(z.theta.data());
  }
  st.SetLabel(std::string(to_string(scheme)) + (st.range(1) ? "/logistic" : "/linear"));
}
BENCHMARK(BM_Step)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {0, 1}});

void BM_MatrixExp(benchmark::State& st) {
  const Index n = st.range(0);
  RngStream rng(2);
  Matrix a(n, n);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  for (auto _ : st) benchmark::DoNotOptimize(oplab::matrix_exp(a).data());
}
BENCHMARK(BM_MatrixExp)->Arg(4)->Arg(8)->Arg(16);

void BM_Kolmogorov(benchmark::State& st) {
  RngStream rng(3);
  std::vector<double> a(st.range(0)), b(st.range(0));
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  const EmpiricalSample sa(a), sb(b);
  for (auto _ : st) benchmark::DoNotOptimize(kolmogorov_distance(sa, sb));
}
BENCHMARK(BM_Kolmogorov)->Arg(10000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
