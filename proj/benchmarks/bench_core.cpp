#include <benchmark/benchmark.h>

#include <random>

#include "stm/stm.hpp"

namespace {

stm::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    stm::Matrix m(rows, cols);
    for (auto& v : m.data()) v = u(rng);
    return m;
}

// args: N, M, grid side
void BM_BatchStepSom(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const auto side = static_cast<std::size_t>(state.range(2));
    const stm::Dataset data(random_matrix(n, m, 1));
    const auto topo = stm::GridTopology::grid(side, side);
    const auto cb = stm::init_codebook(topo, data, 2);
    for (auto _ : state) {
        auto step = stm::batch_step(data, cb, stm::WtaKind::som(2.0));
        benchmark::DoNotOptimize(step.movement);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_BatchStepSom)->Args({1000, 3, 10})->Args({1000, 784, 10})->Unit(benchmark::kMillisecond);

void BM_FindWinner(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const stm::Codebook cb(stm::GridTopology::grid(10, 10), random_matrix(100, m, 3));
    const auto x = random_matrix(1, m, 4);
    for (auto _ : state) benchmark::DoNotOptimize(stm::find_winner(x.row(0), cb));
}
BENCHMARK(BM_FindWinner)->Arg(3)->Arg(784);

void BM_Generate(benchmark::State& state) {
    const stm::Codebook cb(stm::GridTopology::grid(10, 10), random_matrix(100, 784, 5));
    const stm::LatentQuery q{{4.3, 7.1}, 1.0, true};
    for (auto _ : state) benchmark::DoNotOptimize(stm::generate(q, cb).values.data());
}
BENCHMARK(BM_Generate);

void BM_OnlineEpoch(benchmark::State& state) {
    const stm::Dataset data(random_matrix(1000, 3, 6));
    const auto topo = stm::GridTopology::line(50);
    auto sched = stm::TrainingSchedule::defaults_for(topo, 1);
    for (auto _ : state) {
        auto res = stm::train_online(data, topo, stm::Algorithm::Som, {}, sched);
        benchmark::DoNotOptimize(res.codebook.weights().data().data());
    }
}
BENCHMARK(BM_OnlineEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
