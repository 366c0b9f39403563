// Copyright 2026 The maclr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <random>

#include "maclr/clustering.hpp"
#include "maclr/losses.hpp"
#include "maclr/pipeline.hpp"
#include "maclr/retrieval.hpp"
#include "maclr/synthetic.hpp"

namespace {

using namespace maclr;

DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<float> n;
  DenseMatrix m(rows, cols);
  for (auto& v : m.data()) v = n(g);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_dense(n, n, 1), b = random_dense(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_MatmulNT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_dense(n, 64, 1), b = random_dense(4096, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_nt(a, b));
}
BENCHMARK(BM_MatmulNT)->Arg(32)->Arg(512);

void BM_Kmeans(benchmark::State& state) {
  auto pts = random_dense(2000, 64, 3);
  normalize_rows(pts);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, k, 7));
}
BENCHMARK(BM_Kmeans)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TopkBatch(benchmark::State& state) {
  LabelIndex index;
  const auto labels = static_cast<std::size_t>(state.range(0));
  index.embeddings = random_dense(labels, 64, 4);
  for (std::size_t i = 0; i < labels; ++i) index.ids.push_back(i);
  const auto queries = random_dense(500, 64, 5);
  std::vector<std::uint64_t> ids(500);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  for (auto _ : state) benchmark::DoNotOptimize(topk_batch(index, queries, ids, 100));
}
BENCHMARK(BM_TopkBatch)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_LossCluster(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_dense(n, 64, 6), y = random_dense(n, 64, 7);
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = i % 4;
  const auto pos = positives_from_keys(keys);
  for (auto _ : state) benchmark::DoNotOptimize(loss_cluster(x, y, pos));
}
BENCHMARK(BM_LossCluster)->Arg(16)->Arg(128);

// Desk-preset Stage I, 100 steps per iteration.
void BM_Stage1Steps(benchmark::State& state) {
  SyntheticConfig sc;
  sc.train_instances = 500;
  const auto syn = make_synthetic_corpus(sc);
  auto cfg = desk_train_config();
  cfg.schedule = {8, 40, 20, 100};
  const auto mc = desk_model_config();
  const auto data = TrainingData::prepare(syn.train.instances, syn.train.labels,
                                          build_vocab(syn.train.instances, syn.train.labels),
                                          cfg.instance_max_len, cfg.label_max_len);
  auto rng = Rng::stream(0, "init");
  const auto p0 = init_encoder(data.vocab.size(), mc.token_dim, mc.embed_dim, mc.dropout, rng);
  for (auto _ : state) benchmark::DoNotOptimize(run_stage1(data, p0, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.schedule.total_steps);
}
BENCHMARK(BM_Stage1Steps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
