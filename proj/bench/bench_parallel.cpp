// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "gwmax/maxdeg.hpp"
#include "gwmax/oracle.hpp"
#include "gwmax/sampler.hpp"

using namespace gwmax;

namespace {

const OffspringLaw geo = OffspringLaw::geometric(1.0 / 3.0);
const OffspringLaw pow4 = OffspringLaw::power_law(0.5, 4.0);

void table_serial(benchmark::State& state)
{
    const auto n_max = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(MaxDegTable::build_serial(pow4, n_max));
}

void table_parallel(benchmark::State& state)
{
    const auto n_max = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(MaxDegTable(pow4, n_max));
}

SampleConfig bench_config()
{
    SampleConfig cfg;
    cfg.seed = 1;
    return cfg;
}

void sample_eq_serial(benchmark::State& state)
{
    const auto count = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_batch_serial(geo, SampleMode::eq, 4, count, bench_config()));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void sample_eq_parallel(benchmark::State& state)
{
    const auto count = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_batch(geo, SampleMode::eq, 4, count, bench_config()));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

const TreeEnumeration& trees()
{
    static const TreeEnumeration all = enumerate_trees(12);
    return all;
}

const TreePredicate max_two = [](const FiniteTree& t) { return t.max_out_degree() == 2; };

void enumeration_serial(benchmark::State& state)
{
    const auto& all = trees();
    for (auto _ : state) benchmark::DoNotOptimize(exact_event_prob_serial(geo, max_two, all));
}

void enumeration_parallel(benchmark::State& state)
{
    const auto& all = trees();
    for (auto _ : state) benchmark::DoNotOptimize(exact_event_prob(geo, max_two, all));
}

}  // namespace

BENCHMARK(table_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(table_parallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(sample_eq_serial)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(sample_eq_parallel)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(enumeration_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(enumeration_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
