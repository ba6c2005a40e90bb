#include <benchmark/benchmark.h>

#include <random>

#include "numarck/binning.hpp"
#include "numarck/codec.hpp"
#include "numarck/generators.hpp"
#include "numarck/kernel.hpp"
#include "numarck/pipeline.hpp"

namespace {

using namespace numarck;

std::vector<std::uint32_t> random_indices(std::size_t n, unsigned bits) {
  std::mt19937_64 rng(1);
  std::geometric_distribution<std::uint32_t> g(0.05);
  const std::uint32_t cap = (std::uint32_t{1} << bits) - 1;
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = std::min(g(rng), cap);
  return v;
}

void BM_Pack(benchmark::State& state) {
  const unsigned bits = static_cast<unsigned>(state.range(0));
  const auto idx = random_indices(1 << 20, bits);
  for (auto _ : state) benchmark::DoNotOptimize(pack_block(idx, bits));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(idx.size()));
}
BENCHMARK(BM_Pack)->Arg(4)->Arg(8)->Arg(13);

void BM_Unpack(benchmark::State& state) {
  const unsigned bits = static_cast<unsigned>(state.range(0));
  const auto idx = random_indices(1 << 20, bits);
  const auto packed = pack_block(idx, bits);
  for (auto _ : state) benchmark::DoNotOptimize(unpack_block(packed, bits, idx.size()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(idx.size()));
}
BENCHMARK(BM_Unpack)->Arg(4)->Arg(8)->Arg(13);

void BM_Deflate(benchmark::State& state) {
  const auto packed = pack_block(random_indices(645277, 13), 13);
  for (auto _ : state) benchmark::DoNotOptimize(compress_block(packed, kDefaultDeflateLevel));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(packed.size()));
}
BENCHMARK(BM_Deflate)->Unit(benchmark::kMillisecond);

void BM_Histogram(benchmark::State& state) {
  const auto p = synth::multimodal_pair<double>(1 << 20, 1);
  const ChangeRatioField f = compute_change_ratios<double>(TemporalPair<double>(p.base, p.current));
  for (auto _ : state) benchmark::DoNotOptimize(build_histogram(f, Tolerance(1e-3)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_Histogram)->Unit(benchmark::kMillisecond);

void BM_CompressPair(benchmark::State& state) {
  const auto s = synth::multiplicative_series<float>(1 << 22, 2, 0.01, 0.0, 3);
  const TemporalPair<float> pair(s[0], s[1]);
  PipelineConfig cfg;
  cfg.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compress_pair<float>(pair, cfg));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(s[1].size() * 4));
}
BENCHMARK(BM_CompressPair)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PartialDecode(benchmark::State& state) {
  const auto s = synth::multiplicative_series<float>(1 << 22, 2, 0.01, 0.0, 4);
  PipelineConfig cfg;
  cfg.block_bytes = 1 << 16;
  const CompressedVariable v = compress_pair<float>(TemporalPair<float>(s[0], s[1]), cfg).variable;
  const std::uint64_t count = v.header.n * static_cast<std::uint64_t>(state.range(0)) / 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decompress<float>(v, s[0], ElementRange{0, count}));
  }
}
BENCHMARK(BM_PartialDecode)->DenseRange(20, 100, 20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
