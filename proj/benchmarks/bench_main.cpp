#include <benchmark/benchmark.h>

#include "dw/divisors.hpp"
#include "dw/dtn.hpp"
#include "dw/paradiff.hpp"
#include "dw/torus.hpp"
#include "dw/waves.hpp"

namespace {

void BM_ForwardTransform(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    dw::TorusGrid g(n, n, 1.0);
    std::mt19937_64 rng(1);
    std::vector<double> v(g.size());
    std::normal_distribution<double> gauss;
    for (auto& x : v)
        x = gauss(rng);
    for (auto _ : state) {
        dw::FourierField f = dw::forward_transform(g, v);
        benchmark::DoNotOptimize(f.coeffs().data());
    }
    state.SetItemsProcessed(state.iterations() * g.size());
}
BENCHMARK(BM_ForwardTransform)->Arg(64)->Arg(128)->Arg(256);

void BM_DtnApply(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    dw::TorusGrid g(n, n, 1.0);
    auto [w, sd] = dw::stokes_wave(g, 0.05);
    dw::SolverConfig sc;
    sc.depth = 2.0;
    sc.nz = 32;
    dw::DtnSolver solver(g, sc);
    for (auto _ : state) {
        dw::FourierField gp = solver.apply(w.sigma, w.psi);
        benchmark::DoNotOptimize(gp.coeffs().data());
    }
}
BENCHMARK(BM_DtnApply)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Paraproduct(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    dw::TorusGrid g(n, n, 1.0);
    std::mt19937_64 rng(2);
    dw::RandomFieldSpec bs;
    bs.band_hi = 8.0;
    dw::FourierField b = dw::random_field(g, bs, rng);
    dw::FourierField u = dw::random_field(g, {}, rng);
    for (auto _ : state) {
        dw::FourierField y = dw::paraproduct(b, u);
        benchmark::DoNotOptimize(y.coeffs().data());
    }
}
BENCHMARK(BM_Paraproduct)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DivisorScan(benchmark::State& state) {
    dw::DiophantineQuery q;
    q.nu = std::sqrt(2.0);
    q.delta = 0.5;
    q.k1max = static_cast<int>(state.range(0));
    for (auto _ : state) {
        dw::DiophantineReport rep = dw::scan_condition(q);
        benchmark::DoNotOptimize(rep.pass);
    }
}
BENCHMARK(BM_DivisorScan)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
