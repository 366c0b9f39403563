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

#ifndef MACLR_RETRIEVAL_HPP_
#define MACLR_RETRIEVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "maclr/corpus.hpp"
#include "maclr/encoder.hpp"
#include "maclr/numkit.hpp"
#include "maclr/tfidf.hpp"

namespace maclr {

struct LabelIndex {
  DenseMatrix embeddings;           // L x d
  std::vector<std::uint64_t> ids;   // label id of each row

  void validate() const;
};

struct RankedPrediction {
  std::uint64_t instance_id = 0;
  std::vector<Scored> entries;  // best first, ties by ascending label id
  std::size_t k = 0;
};

// Exhaustive inner-product top-k.
RankedPrediction topk(const LabelIndex& index, std::span<const float> query, std::size_t k);

// Top-k for every query row, scoring label blocks with a dense matmul.
std::vector<RankedPrediction> topk_batch(const LabelIndex& index, const DenseMatrix& queries,
                                         std::span<const std::uint64_t> query_ids, std::size_t k,
                                         std::size_t workers = 1);

// TF-IDF retrieval: sparse cosine top-k of each query against the label
// vectors, reported under the given label ids.
std::vector<RankedPrediction> sparse_predict(std::span<const SparseVector> queries,
                                             std::span<const std::uint64_t> query_ids,
                                             std::span<const SparseVector> labels,
                                             std::span<const std::uint64_t> label_ids,
                                             std::size_t k, std::size_t workers = 1);

// Number of the first k predictions that appear in `truth` (sorted ids).
std::size_t hits_at_k(const RankedPrediction& prediction,
                      std::span<const std::uint64_t> truth, std::size_t k);
double precision_at_k(const RankedPrediction& prediction, std::span<const std::uint64_t> truth,
                      std::size_t k);
double recall_at_k(const RankedPrediction& prediction, std::span<const std::uint64_t> truth,
                   std::size_t k);

inline const std::vector<std::size_t> kDefaultKs = {1, 3, 5, 10, 100};
inline const std::vector<std::size_t> kPrecisionKs = {1, 3, 5};

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> precision;  // k in {1,3,5} among ks
  std::map<std::size_t, double> recall;     // every k in ks
  std::size_t instances = 0;                // with >= 1 true label
  std::size_t excluded = 0;                 // without any true label

  nlohmann::ordered_json to_json() const;
};

using TruthMap = std::map<std::uint64_t, std::vector<std::uint64_t>>;

// Instance id -> sorted, unique label ids.
TruthMap truth_from_pairs(std::span<const PositivePair> pairs);

// Macro-averaged P@k / R@k over predictions with a non-empty truth set.
MetricsReport compute_metrics(std::span<const RankedPrediction> predictions,
                              const TruthMap& truth, std::span<const std::size_t> ks);

LabelIndex build_label_index(const EncoderParams& params, std::span<const TokenIds> label_tokens,
                             std::span<const std::uint64_t> label_ids, std::size_t workers = 1);

// Embeds instances in eval mode, retrieves top-max(ks) and scores them.
// Every pair must reference a given instance and an indexed label.
MetricsReport evaluate(const LabelIndex& index, const EncoderParams& params,
                       std::span<const TokenIds> instance_tokens,
                       std::span<const std::uint64_t> instance_ids,
                       std::span<const PositivePair> pairs, std::span<const std::size_t> ks,
                       std::size_t workers = 1);

// "instance_id<TAB>label_id<TAB>score<TAB>rank" with six-decimal scores,
// ranks from 1.
void write_predictions(std::ostream& out, std::span<const RankedPrediction> predictions);

}  // namespace maclr

#endif  // MACLR_RETRIEVAL_HPP_
