#include <benchmark/benchmark.h>

#include <random>

#include "secimg/baseline.hpp"
#include "secimg/binfmt.hpp"
#include "secimg/imaging.hpp"
#include "secimg/render.hpp"
#include "secimg/segmentation.hpp"
#include "synth.hpp"

using namespace secimg;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

void BM_Rasterize(benchmark::State& state) {
  const auto bytes = random_bytes(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(bytes, 1024));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rasterize)->Arg(64 << 10)->Arg(1 << 20)->Arg(8 << 20);

void BM_ResizeTo224(benchmark::State& state) {
  const auto bytes = random_bytes(static_cast<std::size_t>(state.range(0)), 2);
  const GrayImage img = rasterize(bytes, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(resize(img, 224, 224));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResizeTo224)->Arg(64 << 10)->Arg(1 << 20)->Arg(8 << 20);

void BM_ParseBytesText(benchmark::State& state) {
  const auto bytes = random_bytes(static_cast<std::size_t>(state.range(0)), 3);
  const std::string text = testing::to_bytes_text(bytes, 0x401000);
  for (auto _ : state) benchmark::DoNotOptimize(parse_bytes_text(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseBytesText)->Arg(64 << 10)->Arg(1 << 20);

void BM_ComposeStack(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto bin = testing::random_covered_binary(rng, 256 << 10);
  const ChannelSpec spec = state.range(0) == 0 ? default_spec(Scheme::S4) : default_spec(Scheme::S5);
  for (auto _ : state) benchmark::DoNotOptimize(compose_stack(bin, spec, 224, 224));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bin.buffer.size()));
  state.SetLabel(channel_spec_label(spec));
}
BENCHMARK(BM_ComposeStack)->Arg(0)->Arg(1);

void BM_KnnPredict(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto rows = static_cast<std::size_t>(state.range(0));
  std::vector<ChannelStack> stacks;
  std::vector<int> labels;
  for (std::size_t i = 0; i < rows; ++i) {
    ChannelStack s;
    for (int c = 0; c < 3; ++c) s.channels.emplace_back(64, 64, random_bytes(64 * 64, rng()));
    stacks.push_back(std::move(s));
    labels.push_back(1 + static_cast<int>(i % 9));
  }
  const KnnModel model = knn_fit(stacks, labels);
  for (auto _ : state) benchmark::DoNotOptimize(knn_predict_proba(model, stacks.front()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnPredict)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
