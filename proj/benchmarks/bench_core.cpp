#include <random>

#include <benchmark/benchmark.h>

#include "skia/predictors.hpp"
#include "skia/shadow_decoder.hpp"

namespace {

using namespace skia;

CacheLineView random_line(IsaKind isa, uint64_t seed) {
    std::mt19937_64 rng(seed);
    CacheLineView v;
    v.base_addr = 0x400000;
    for (auto& b : v.bytes) b = uint8_t(rng());
    v.entry_offset = uint8_t(rng() % 64);
    return v;
}

void BM_LengthVector(benchmark::State& state) {
    const IsaKind isa = state.range(0) ? IsaKind::X86Subset : IsaKind::SVL;
    const auto line = random_line(isa, 42);
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_length_vector(line, isa));
    }
}
BENCHMARK(BM_LengthVector)->Arg(0)->Arg(1);

void BM_HeadDecode(benchmark::State& state) {
    const IsaKind isa = state.range(0) ? IsaKind::X86Subset : IsaKind::SVL;
    uint64_t seed = 1;
    for (auto _ : state) {
        const auto line = random_line(isa, seed++);
        benchmark::DoNotOptimize(decode_head(line, isa, IndexPolicy::FirstIndex));
    }
}
BENCHMARK(BM_HeadDecode)->Arg(0)->Arg(1);

void BM_BtbLookup(benchmark::State& state) {
    Btb btb(8192, 4);
    std::mt19937_64 rng(7);
    std::vector<uint64_t> pcs(4096);
    for (auto& pc : pcs) pc = rng() & 0xFFFFFF;
    for (uint64_t pc : pcs) btb.insert(pc, BtbType::DirectUncond, pc + 64);
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(btb.lookup(pcs[i++ & 4095]));
    }
}
BENCHMARK(BM_BtbLookup);

}  // namespace

BENCHMARK_MAIN();
