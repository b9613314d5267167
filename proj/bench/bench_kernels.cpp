#include "isoalign/kernels.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace isoalign;

namespace {

RowMatrix random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix m = linalg::gaussian(n, d, rng);
    m.rowwise().normalize();
    return m;
}

// Arguments: rows, dim. The parallel variants also take a thread count.

void BM_nearest_serial(benchmark::State& st) {
    RowMatrix q = random_rows(st.range(0), st.range(1), 1), g = random_rows(st.range(0), st.range(1), 2);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::nearest(q, g));
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_nearest_parallel(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(2)));
    RowMatrix q = random_rows(st.range(0), st.range(1), 1), g = random_rows(st.range(0), st.range(1), 2);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::parallel::nearest(q, g));
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_affine_serial(benchmark::State& st) {
    RowMatrix x = random_rows(st.range(0), st.range(1), 3);
    Rng rng(4);
    Matrix q = linalg::gaussian(st.range(1), st.range(1), rng);
    Vector mu = Vector::Zero(st.range(1));
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::affine_rows(x, q, mu, mu));
}

void BM_affine_parallel(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(2)));
    RowMatrix x = random_rows(st.range(0), st.range(1), 3);
    Rng rng(4);
    Matrix q = linalg::gaussian(st.range(1), st.range(1), rng);
    Vector mu = Vector::Zero(st.range(1));
    for (auto _ : st) benchmark::DoNotOptimize(kernels::parallel::affine_rows(x, q, mu, mu));
}

void BM_top_k_serial(benchmark::State& st) {
    RowMatrix q = random_rows(st.range(0), st.range(1), 5), g = random_rows(st.range(0), st.range(1), 6);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::top_k(q, g, 10));
}

void BM_top_k_parallel(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(2)));
    RowMatrix q = random_rows(st.range(0), st.range(1), 5), g = random_rows(st.range(0), st.range(1), 6);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::parallel::top_k(q, g, 10));
}

void serial_args(benchmark::internal::Benchmark* b) {
    for (long n : {512, 2048}) b->Args({n, 64});
}

void parallel_args(benchmark::internal::Benchmark* b) {
    const long max_t = omp_get_max_threads();
    for (long n : {512, 2048})
        for (long t = 1; t <= max_t; t *= 2) b->Args({n, 64, t});
}

} // namespace

BENCHMARK(BM_nearest_serial)->Apply(serial_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_nearest_parallel)->Apply(parallel_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_affine_serial)->Apply(serial_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_affine_parallel)->Apply(parallel_args)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_top_k_serial)->Apply(serial_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_top_k_parallel)->Apply(parallel_args)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
