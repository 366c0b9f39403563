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

#include "maclr/retrieval.hpp"

#include <algorithm>
#include <set>

#include <spdlog/fmt/fmt.h>

#include "maclr/errors.hpp"

namespace maclr {

void LabelIndex::validate() const {
  if (embeddings.rows() != ids.size()) {
    throw DimensionError("label index has " + std::to_string(embeddings.rows()) + " rows but " +
                         std::to_string(ids.size()) + " ids");
  }
  if (!embeddings.all_finite()) throw NumericError("label index contains non-finite values");
  std::set<std::uint64_t> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw IntegrityError("label index ids are not unique");
}

RankedPrediction topk(const LabelIndex& index, std::span<const float> query, std::size_t k) {
  if (k < 1) throw ParameterError("topk: k must be at least 1");
  if (query.size() != index.embeddings.cols()) {
    throw DimensionError("query dimension " + std::to_string(query.size()) +
                         " does not match index dimension " +
                         std::to_string(index.embeddings.cols()));
  }
  std::vector<float> scores(index.embeddings.rows());
  for (std::size_t r = 0; r < scores.size(); ++r) {
    scores[r] = dot<float>(query, index.embeddings.row(r));
  }
  RankedPrediction p;
  p.k = k;
  p.entries = select_topk(scores, k, index.ids);
  return p;
}

std::vector<RankedPrediction> topk_batch(const LabelIndex& index, const DenseMatrix& queries,
                                         std::span<const std::uint64_t> query_ids, std::size_t k,
                                         std::size_t workers) {
  if (k < 1) throw ParameterError("topk: k must be at least 1");
  if (queries.cols() != index.embeddings.cols()) {
    throw DimensionError("query dimension does not match index dimension");
  }
  if (query_ids.size() != queries.rows()) {
    throw DimensionError("one id per query row is required");
  }
  constexpr std::size_t kBlock = 256;
  std::vector<RankedPrediction> out(queries.rows());
  for (std::size_t begin = 0; begin < queries.rows(); begin += kBlock) {
    const std::size_t end = std::min(queries.rows(), begin + kBlock);
    DenseMatrix block(end - begin, queries.cols());
    for (std::size_t i = begin; i < end; ++i) {
      std::copy(queries.row(i).begin(), queries.row(i).end(), block.row(i - begin).begin());
    }
    // Same per-entry accumulation order as topk(): a plain dot per (query, label).
    const auto scores = matmul_nt(block, index.embeddings, workers);
    for (std::size_t i = begin; i < end; ++i) {
      out[i].instance_id = query_ids[i];
      out[i].k = k;
      out[i].entries = select_topk(scores.row(i - begin), k, index.ids);
    }
  }
  return out;
}

std::vector<RankedPrediction> sparse_predict(std::span<const SparseVector> queries,
                                             std::span<const std::uint64_t> query_ids,
                                             std::span<const SparseVector> labels,
                                             std::span<const std::uint64_t> label_ids,
                                             std::size_t k, std::size_t workers) {
  if (k < 1) throw ParameterError("sparse_predict: k must be at least 1");
  if (queries.size() != query_ids.size() || labels.size() != label_ids.size()) {
    throw DimensionError("sparse_predict: one id per vector is required");
  }
  std::vector<RankedPrediction> out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i].instance_id = query_ids[i];
      out[i].k = k;
      std::vector<float> scores(labels.size());
      for (std::size_t l = 0; l < labels.size(); ++l) {
        scores[l] = static_cast<float>(sparse_dot(queries[i], labels[l]));
      }
      out[i].entries = select_topk(scores, k, label_ids);
    }
  });
  return out;
}

std::size_t hits_at_k(const RankedPrediction& prediction, std::span<const std::uint64_t> truth,
                      std::size_t k) {
  const std::size_t n = std::min(k, prediction.entries.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    hits += std::binary_search(truth.begin(), truth.end(), prediction.entries[r].id) ? 1 : 0;
  }
  return hits;
}

double precision_at_k(const RankedPrediction& prediction, std::span<const std::uint64_t> truth,
                      std::size_t k) {
  if (k < 1) throw ParameterError("precision_at_k: k must be at least 1");
  return static_cast<double>(hits_at_k(prediction, truth, k)) / static_cast<double>(k);
}

double recall_at_k(const RankedPrediction& prediction, std::span<const std::uint64_t> truth,
                   std::size_t k) {
  if (k < 1) throw ParameterError("recall_at_k: k must be at least 1");
  if (truth.empty()) throw PreconditionError("recall_at_k: empty truth set");
  return static_cast<double>(hits_at_k(prediction, truth, k)) /
         static_cast<double>(truth.size());
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  for (auto k : ks) {
    if (auto it = precision.find(k); it != precision.end()) j["P@" + std::to_string(k)] = it->second;
  }
  for (auto k : ks) {
    if (auto it = recall.find(k); it != recall.end()) j["R@" + std::to_string(k)] = it->second;
  }
  j["instances"] = instances;
  j["excluded"] = excluded;
  return j;
}

TruthMap truth_from_pairs(std::span<const PositivePair> pairs) {
  TruthMap truth;
  for (const auto& p : pairs) truth[p.instance_id].push_back(p.label_id);
  for (auto& [id, labels] : truth) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  return truth;
}

MetricsReport compute_metrics(std::span<const RankedPrediction> predictions,
                              const TruthMap& truth, std::span<const std::size_t> ks) {
  MetricsReport r;
  r.ks.assign(ks.begin(), ks.end());
  for (auto k : ks) {
    if (k < 1) throw ParameterError("metric cutoffs must be at least 1");
    if (std::find(kPrecisionKs.begin(), kPrecisionKs.end(), k) != kPrecisionKs.end()) {
      r.precision[k] = 0.0;
    }
    r.recall[k] = 0.0;
  }
  // Instance-id order keeps the floating-point reduction deterministic.
  std::vector<const RankedPrediction*> ordered;
  for (const auto& p : predictions) ordered.push_back(&p);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->instance_id < b->instance_id; });
  for (const auto* p : ordered) {
    auto it = truth.find(p->instance_id);
    if (it == truth.end() || it->second.empty()) {
      ++r.excluded;
      continue;
    }
    ++r.instances;
    for (auto& [k, sum] : r.precision) sum += precision_at_k(*p, it->second, k);
    for (auto& [k, sum] : r.recall) sum += recall_at_k(*p, it->second, k);
  }
  if (r.instances > 0) {
    const double n = static_cast<double>(r.instances);
    for (auto& [k, v] : r.precision) v /= n;
    for (auto& [k, v] : r.recall) v /= n;
  }
  return r;
}

LabelIndex build_label_index(const EncoderParams& params, std::span<const TokenIds> label_tokens,
                             std::span<const std::uint64_t> label_ids, std::size_t workers) {
  LabelIndex index;
  index.embeddings = encode_batch(params, label_tokens, workers);
  index.ids.assign(label_ids.begin(), label_ids.end());
  index.validate();
  return index;
}

MetricsReport evaluate(const LabelIndex& index, const EncoderParams& params,
                       std::span<const TokenIds> instance_tokens,
                       std::span<const std::uint64_t> instance_ids,
                       std::span<const PositivePair> pairs, std::span<const std::size_t> ks,
                       std::size_t workers) {
  if (instance_tokens.size() != instance_ids.size()) {
    throw DimensionError("one id per test instance is required");
  }
  if (ks.empty()) throw ParameterError("evaluate: empty cutoff list");
  for (auto k : ks) {
    if (std::find(kDefaultKs.begin(), kDefaultKs.end(), k) == kDefaultKs.end()) {
      throw ParameterError("evaluate: cutoff " + std::to_string(k) +
                           " not in {1, 3, 5, 10, 100}");
    }
  }
  const std::set<std::uint64_t> known_instances(instance_ids.begin(), instance_ids.end());
  const std::set<std::uint64_t> known_labels(index.ids.begin(), index.ids.end());
  for (const auto& p : pairs) {
    if (!known_instances.contains(p.instance_id) || !known_labels.contains(p.label_id)) {
      throw IntegrityError("test pair (" + std::to_string(p.instance_id) + ", " +
                           std::to_string(p.label_id) + ") does not resolve");
    }
  }
  const auto queries = encode_batch(params, instance_tokens, workers);
  const auto k_max = *std::max_element(ks.begin(), ks.end());
  const auto predictions = topk_batch(index, queries, instance_ids, k_max, workers);
  return compute_metrics(predictions, truth_from_pairs(pairs), ks);
}

void write_predictions(std::ostream& out, std::span<const RankedPrediction> predictions) {
  for (const auto& p : predictions) {
    for (std::size_t r = 0; r < p.entries.size(); ++r) {
      out << fmt::format("{}\t{}\t{:.6f}\t{}\n", p.instance_id, p.entries[r].id,
                         p.entries[r].score, r + 1);
    }
  }
}

}  // namespace maclr
