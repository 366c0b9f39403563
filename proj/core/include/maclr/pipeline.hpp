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

#ifndef MACLR_PIPELINE_HPP_
#define MACLR_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maclr/clustering.hpp"
#include "maclr/corpus.hpp"
#include "maclr/encoder.hpp"
#include "maclr/losses.hpp"
#include "maclr/tfidf.hpp"

namespace maclr {

struct ModelConfig {
  std::size_t token_dim = 128;  // d_e
  std::size_t embed_dim = 512;  // d
  float dropout = 0.1f;
};

struct TrainConfig {
  std::size_t batch_size = 32;        // N
  std::size_t label_batch_size = 32;  // M
  ScheduleConfig schedule;            // K_0, T_K, T_update, T_total
  double base_lr = 1e-5;
  double warmup_ratio = 0.1;
  std::uint64_t seed = 0;
  std::size_t k_pseudo = 3;
  double finetune_lr = 5e-6;
  std::uint64_t finetune_steps = 2000;
  std::size_t instance_max_len = 288;
  std::size_t label_max_len = 64;
  std::size_t kmeans_max_iters = 50;
  // Draw half of each Stage-I batch from one random cluster.
  bool stratified_batches = false;
  double temperature = 1.0;
  std::size_t workers = 1;

  std::uint64_t total_steps() const noexcept { return schedule.total_steps; }
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// Full-scale hyper-parameters.
TrainConfig paper_train_config();
ModelConfig paper_model_config();
// Laptop-scale preset: N=M=16, T_total=2000, K_0=8, T_K=400, T_update=200.
TrainConfig desk_train_config();
// d=64, d_e=32.
ModelConfig desk_model_config();

// Tokenised view of a corpus: instance and label token ids (truncated to the
// configured lengths) plus the ICT pairs.
struct TrainingData {
  Vocabulary vocab;
  std::vector<std::uint64_t> instance_ids;
  std::vector<TokenIds> instance_tokens;
  std::vector<std::uint64_t> label_ids;
  std::vector<TokenIds> label_tokens;
  IctPairs ict;

  static TrainingData prepare(std::span<const Instance> instances, std::span<const Label> labels,
                              Vocabulary vocab, std::size_t instance_max_len,
                              std::size_t label_max_len);

  std::size_t instance_row(std::uint64_t id) const;
  std::size_t label_row(std::uint64_t id) const;
};

// Tokenises instances for retrieval (truncated to max_len).
std::vector<TokenIds> tokenize_instances(std::span<const Instance> instances,
                                         const Vocabulary& vocab, std::size_t max_len);

struct StepRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  double loss_cluster = 0.0;
  double loss_label = 0.0;
  std::optional<ScheduledK> k;  // Stage I only
  std::size_t clusters = 0;     // cluster count behind the current assignment
  double lr = 0.0;
  double elapsed_seconds = 0.0;
  bool doubled = false;         // K doubled after this step
  bool reclustered = false;     // assignment recomputed after this step
};

struct TrainLog {
  nlohmann::ordered_json header;
  std::vector<StepRecord> steps;

  std::size_t recluster_count() const;
  // JSON-lines: the header, then one record every `interval` steps (and the
  // last step).
  void write_jsonl(std::ostream& out, std::uint64_t interval = 1) const;
};

struct TrainResult {
  EncoderParams params;
  TrainLog log;
};

// Stage I: ICT pairs with multi-scale adaptive clustering and label
// regularisation, minimising L_cluster + L_label.
// One Stage-I step with its dropout masks drawn up front, so the objective
// is a plain function of the parameters.
template <typename T>
struct Stage1Batch {
  std::vector<TokenIds> contexts;   // N
  std::vector<TokenIds> titles;     // N
  std::vector<TokenIds> negatives;  // M sampled labels
  PositiveSets positives;
  std::vector<std::vector<T>> h_masks;
  std::vector<std::vector<T>> h_plus_masks;
  std::vector<std::vector<T>> title_masks;
  std::vector<std::vector<T>> negative_masks;
};

// L_cluster(h, titles) + L_label(h, h+, negatives), where h is the first
// dropout view of each context. Parameter gradients are added to `grads`
// when it is non-null.
template <typename T>
Stage1Loss<T> stage1_objective(const EncoderParamsT<T>& params, const Stage1Batch<T>& batch,
                               double temperature = 1.0, EncoderGrads<T>* grads = nullptr);

TrainResult run_stage1(const TrainingData& data, EncoderParams params, const TrainConfig& config);

enum PseudoSource : std::uint8_t { kFromEncoder = 1, kFromTfidf = 2 };

struct PseudoPair {
  std::uint64_t instance_id = 0;
  std::uint64_t label_id = 0;
  std::uint8_t sources = 0;  // PseudoSource bits

  friend bool operator==(const PseudoPair&, const PseudoPair&) = default;
};

struct PseudoPairSet {
  std::vector<PseudoPair> pairs;  // sorted by (instance, label), unique
};

// Idf fitted on the training instances (UNK removed).
IdfTable fit_instance_idf(const TrainingData& data);

// Top-k labels per training instance from the encoder and from TF-IDF,
// merged per (instance, label) with both source tags kept.
PseudoPairSet build_pseudo_pairs(const TrainingData& data, const EncoderParams& params,
                                 const IdfTable& idf, std::size_t k_pseudo,
                                 std::size_t workers = 1);

// Stage II: L_cluster over pseudo pairs, positives = same instance.
TrainResult run_stage2(const TrainingData& data, EncoderParams params,
                       const PseudoPairSet& pseudo, const TrainConfig& config);

// Few-shot fine-tuning with the in-batch contrastive loss on true pairs.
TrainResult finetune(const TrainingData& data, EncoderParams params, const FewShotSubset& fewshot,
                     const TrainConfig& config);

}  // namespace maclr

#endif  // MACLR_PIPELINE_HPP_
