// OpenMP kernels against the serial reference versions, on table-preset sized
// inputs. Set OMP_NUM_THREADS to vary the parallel side.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "surreal/kernels.hpp"

using namespace surreal;
namespace k = surreal::kernels;

namespace {

ChartBatch chart(std::size_t n, Shape s) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> l(-1, 1), t(-kPi, kPi);
    ChartBatch b(n, s);
    for (std::size_t i = 0; i < b.size(); ++i) b.logr[i] = l(rng), b.theta[i] = t(rng);
    return b;
}

std::vector<double> rows(std::size_t r, std::size_t c) { return std::vector<double>(r * c, 1.0 / static_cast<double>(c)); }

// Second wFM layer of the table network: [20,48,48] -> [20,22,22].
const Shape kWfmIn{20, 48, 48};
const k::Window kWfmWin{5, 5, 2, 2};

void BM_WfmConv_OpenMP(benchmark::State& st) {
    const auto in = chart(st.range(0), kWfmIn);
    const auto w = rows(20, 20 * 25);
    ChartBatch out;
    for (auto _ : st) {
        k::wfm_conv_forward(in, w, 20, kWfmWin, out);
        benchmark::DoNotOptimize(out.logr.data());
    }
}

void BM_WfmConv_Reference(benchmark::State& st) {
    const auto in = chart(st.range(0), kWfmIn);
    const auto w = rows(20, 20 * 25);
    ChartBatch out;
    for (auto _ : st) {
        k::reference::wfm_conv_forward(in, w, 20, kWfmWin, out);
        benchmark::DoNotOptimize(out.logr.data());
    }
}

const Shape kDistIn{20, 22, 22};

void BM_Distance_OpenMP(benchmark::State& st) {
    const auto in = chart(st.range(0), kDistIn);
    const auto w = rows(1, kDistIn.size());
    RealBatch out;
    std::vector<double> ml, mt;
    for (auto _ : st) {
        k::distance_forward(in, w, 1, out, ml, mt);
        benchmark::DoNotOptimize(out.data.data());
    }
}

void BM_Distance_Reference(benchmark::State& st) {
    const auto in = chart(st.range(0), kDistIn);
    const auto w = rows(1, kDistIn.size());
    RealBatch out;
    for (auto _ : st) {
        k::reference::distance_forward(in, w, 1, out);
        benchmark::DoNotOptimize(out.data.data());
    }
}

// First real convolution: [20,22,22] -> [30,18,18].
const k::ConvGeometry kConv{5, 5, 1, 1, 0, 0};

RealBatch real_input(std::size_t n) {
    RealBatch b(n, {20, 22, 22});
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : b.data) v = u(rng);
    return b;
}

void BM_Conv_OpenMP(benchmark::State& st) {
    const auto in = real_input(st.range(0));
    const std::vector<double> w(30 * 20 * 25, 0.01), b(30, 0.0);
    RealBatch out;
    for (auto _ : st) {
        k::conv2d_forward(in, w, b, 30, kConv, out);
        benchmark::DoNotOptimize(out.data.data());
    }
}

void BM_Conv_Reference(benchmark::State& st) {
    const auto in = real_input(st.range(0));
    const std::vector<double> w(30 * 20 * 25, 0.01), b(30, 0.0);
    RealBatch out;
    for (auto _ : st) {
        k::reference::conv2d_forward(in, w, b, 30, kConv, out);
        benchmark::DoNotOptimize(out.data.data());
    }
}

}  // namespace

BENCHMARK(BM_WfmConv_OpenMP)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WfmConv_Reference)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distance_OpenMP)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distance_Reference)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv_OpenMP)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv_Reference)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
