// Copyright 2026 The Quarry Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "quarry/embedding.h"
#include "quarry/retrieval.h"

namespace quarry {
namespace {

VectorIndex random_index(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> g;
  VectorIndex index(Granularity::kDocument, dim, "random");
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(dim);
    for (auto& x : v) x = g(rng);
    normalize(v);
    index.add({"d" + std::to_string(i), std::move(v), ""});
  }
  return index;
}

void BM_Search(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const VectorIndex index = random_index(n, 256, rng);
  Vector q(256, 1.0f);
  normalize(q);
  for (auto _ : state) benchmark::DoNotOptimize(index.search(q, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Search)->Arg(1000)->Arg(5000)->Arg(20000);

void BM_HashingEmbed(benchmark::State& state) {
  HashingEmbedder e(256);
  const std::string text =
      "We propose a graph neural network for citation recommendation and evaluate it on "
      "two scholarly corpora with strong baselines.";
  for (auto _ : state) benchmark::DoNotOptimize(e.embed_batch({text}));
}
BENCHMARK(BM_HashingEmbed);

}  // namespace
}  // namespace quarry
