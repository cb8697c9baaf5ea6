#include <benchmark/benchmark.h>

#include <cmath>

#include "multisol/dirichlet.hpp"
#include "multisol/kernels.hpp"
#include "multisol/rng.hpp"

using namespace msol;

namespace {

Matrix simplex_rows(std::size_t n, std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    Matrix p(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            p(i, j) = -std::log(rng.uniform_open());
            total += p(i, j);
        }
        for (std::size_t j = 0; j < m; ++j) {
            p(i, j) /= total;
        }
    }
    return p;
}

Matrix dense(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(r, c);
    for (auto& v : a.data()) {
        v = rng.uniform() - 0.5;
    }
    return a;
}

// args: batch rows, classes; 1024 thresholds
template <void (*Kernel)(const Matrix&, const Matrix&, double, Matrix&)>
void bm_membership(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const Matrix preds = simplex_rows(n, m, 1);
    const auto ts = sample_thresholds(DirichletPrior::symmetric(m, 1.0), 1024, 2);
    Matrix out;
    for (auto _ : state) {
        Kernel(preds, ts.samples(), 20.0, out);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <void (*Kernel)(const Matrix&, const Matrix&, double, const Matrix&, Matrix&)>
void bm_membership_vjp(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const Matrix preds = simplex_rows(n, m, 1);
    const auto ts = sample_thresholds(DirichletPrior::symmetric(m, 1.0), 1024, 2);
    const Matrix upstream = dense(n, m, 3);
    Matrix out;
    for (auto _ : state) {
        Kernel(preds, ts.samples(), 20.0, upstream, out);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <void (*Kernel)(const Matrix&, const Matrix&, Matrix&)>
void bm_hard_membership(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const Matrix preds = simplex_rows(n, m, 1);
    const auto ts = sample_thresholds(DirichletPrior::symmetric(m, 1.0), 1024, 2);
    Matrix out;
    for (auto _ : state) {
        Kernel(preds, ts.samples(), out);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

// args: square size
template <void (*Kernel)(const Matrix&, const Matrix&, Matrix&)>
void bm_matmul(benchmark::State& state) {
    const auto s = static_cast<std::size_t>(state.range(0));
    const Matrix a = dense(s, s, 4);
    const Matrix b = dense(s, s, 5);
    Matrix c;
    for (auto _ : state) {
        Kernel(a, b, c);
        benchmark::DoNotOptimize(c.data().data());
    }
}

void membership_args(benchmark::internal::Benchmark* b) {
    b->Args({128, 3})->Args({128, 10})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(bm_membership<kernels::smoothed_membership_serial>)->Apply(membership_args);
BENCHMARK(bm_membership<kernels::smoothed_membership_parallel>)->Apply(membership_args);
BENCHMARK(bm_membership_vjp<kernels::smoothed_membership_vjp_serial>)->Apply(membership_args);
BENCHMARK(bm_membership_vjp<kernels::smoothed_membership_vjp_parallel>)->Apply(membership_args);
BENCHMARK(bm_hard_membership<kernels::hard_membership_serial>)->Apply(membership_args);
BENCHMARK(bm_hard_membership<kernels::hard_membership_parallel>)->Apply(membership_args);
BENCHMARK(bm_matmul<kernels::matmul_serial>)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_matmul<kernels::matmul_parallel>)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
