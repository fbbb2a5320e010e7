#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hcr/adaptive.hpp"
#include "hcr/estimate.hpp"
#include "hcr/polybasis.hpp"
#include "hcr/predict.hpp"

namespace {

std::vector<double> uniform_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    return x;
}

void BM_BuildBasis(benchmark::State& state) {
    for (auto _ : state) {
        hcr::OrthoBasis basis(int(state.range(0)));
        benchmark::DoNotOptimize(basis.evaluate(int(state.range(0)), 0.5));
    }
}
BENCHMARK(BM_BuildBasis)->Arg(5)->Arg(12);

void BM_EvalBasisAll(benchmark::State& state) {
    hcr::OrthoBasis basis(int(state.range(0)));
    std::vector<double> out(std::size_t(state.range(0)) + 1);
    double x = 0.0;
    for (auto _ : state) {
        x += 1e-6;
        if (x > 1.0) x -= 1.0;
        basis.evaluate_all(x, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_EvalBasisAll)->Arg(5)->Arg(9);

void BM_EstimateDense(benchmark::State& state) {
    const int d = int(state.range(0));
    const int m = int(state.range(1));
    const auto x = uniform_series(29354, 7);
    const hcr::WindowSet w = hcr::build_windows(x, d);
    hcr::OrthoBasis basis(m);
    for (auto _ : state) {
        auto t = hcr::estimate_coefficients(w, basis, {m});
        benchmark::DoNotOptimize(t.values().data());
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(w.rows));
}
BENCHMARK(BM_EstimateDense)->Args({2, 5})->Args({4, 4})->Args({6, 5})->Unit(benchmark::kMillisecond);

void BM_Condition(benchmark::State& state) {
    const int d = 6, m = 5;
    const auto x = uniform_series(20000, 11);
    const hcr::WindowSet w = hcr::build_windows(x, d);
    hcr::OrthoBasis basis(m);
    const auto tensor = hcr::estimate_coefficients(w, basis, {m});
    std::vector<double> ctx(d - 1, 0.4);
    std::size_t i = 0;
    for (auto _ : state) {
        ctx[i % ctx.size()] = 0.1 + 0.8 * double(i % 97) / 96.0;
        ++i;
        auto p = hcr::condition(tensor, basis, ctx);
        benchmark::DoNotOptimize(p.coeffs.data());
    }
}
BENCHMARK(BM_Condition);

void BM_AdaptiveUpdate(benchmark::State& state) {
    const int d = 2, m = 4;
    hcr::OrthoBasis basis(m);
    hcr::AdaptiveState st({m, m}, 0.999);
    std::vector<double> window{0.3, 0.6};
    for (auto _ : state) {
        window[0] = window[0] < 0.9 ? window[0] + 0.0001 : 0.1;
        st.update(window, basis);
        benchmark::DoNotOptimize(st.coefficients().data());
    }
}
BENCHMARK(BM_AdaptiveUpdate);

}  // namespace

BENCHMARK_MAIN();
