// Microbenchmarks for the pieces that dominate experiment wall time: the
// dense/attention kernels inside the training loop, the streaming AUC, and
// prompt rendering.

#include <benchmark/benchmark.h>

#include <vector>

#include "ratebench/dataset.hpp"
#include "ratebench/kernel/attention.hpp"
#include "ratebench/kernel/ops.hpp"
#include "ratebench/kernel/rng.hpp"
#include "ratebench/kernel/tensor.hpp"
#include "ratebench/llm/prompt.hpp"
#include "ratebench/metrics.hpp"

namespace {

using namespace ratebench;

void bench_dense_forward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto d_in = static_cast<std::size_t>(state.range(1));
  const auto d_out = static_cast<std::size_t>(state.range(2));
  kernel::Rng rng(1);
  kernel::Tensor x = kernel::Tensor::zeros({rows, d_in});
  kernel::Tensor w = kernel::Tensor::zeros({d_in, d_out});
  kernel::Tensor b = kernel::Tensor::zeros({d_out});
  rng.fill_normal(x, 0.0, 1.0);
  rng.fill_normal(w, 0.0, 0.1);
  for (auto _ : state) {
    kernel::Tensor y = kernel::dense_forward(x, w, b);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(rows * d_in * d_out));
}
BENCHMARK(bench_dense_forward)->Args({10, 64, 64})->Args({10, 128, 128})->Args({64, 64, 64});

void bench_attention_forward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto heads = static_cast<std::size_t>(state.range(2));
  kernel::Rng rng(2);
  kernel::Tensor x = kernel::Tensor::zeros({len, dim});
  rng.fill_normal(x, 0.0, 1.0);
  std::vector<kernel::Tensor> weights;
  for (int i = 0; i < 4; ++i) {
    kernel::Tensor w = kernel::Tensor::zeros({dim, dim});
    rng.fill_normal(w, 0.0, 0.1);
    weights.push_back(std::move(w));
  }
  const kernel::Tensor bias = kernel::Tensor::zeros({dim});
  kernel::AttentionWeights w;
  w.wq = &weights[0];
  w.wk = &weights[1];
  w.wv = &weights[2];
  w.wo = &weights[3];
  w.bq = w.bk = w.bv = w.bo = &bias;
  const std::vector<std::uint8_t> valid(len, 1);
  for (auto _ : state) {
    kernel::AttentionCache cache;
    kernel::Tensor y = kernel::attention_forward(x, valid, w, heads, cache);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(bench_attention_forward)->Args({10, 16, 2})->Args({10, 64, 2})->Args({10, 128, 4});

void bench_auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  kernel::Rng rng(3);
  std::vector<metrics::EvalPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = 1.0 + static_cast<double>(rng.below(5));
    pairs.push_back({1.0 + 4.0 * rng.uniform01(), label});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::auc_roc(pairs));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(bench_auc)->Arg(2000)->Arg(100000);

void bench_prompt_render(benchmark::State& state) {
  data::Catalog catalog;
  for (int i = 0; i < 12; ++i) {
    data::ItemMeta meta;
    meta.item_id = "m" + std::to_string(i);
    meta.title = "A Title Of Middling Length " + std::to_string(i) + " (1999)";
    meta.attributes = {"Drama", "Comedy"};
    catalog.add(std::move(meta));
  }
  data::RatingExample example;
  example.user_id = "u1";
  example.item_id = "m0";
  example.label = 4.0;
  for (int i = 1; i <= 10; ++i) {
    example.history.push_back({"m" + std::to_string(i), 3.0 + (i % 3), 1000 + i});
  }
  const llm::PromptTemplate tmpl = llm::PromptTemplate::movies();
  for (auto _ : state) {
    benchmark::DoNotOptimize(llm::build_prompt(example, {}, catalog, tmpl));
  }
}
BENCHMARK(bench_prompt_render);

}  // namespace

BENCHMARK_MAIN();
