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

#include "maclr/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/fmt/fmt.h>

#include "maclr/errors.hpp"

namespace maclr {

IdfTable::IdfTable(std::vector<std::uint32_t> document_frequency, std::size_t n_docs)
    : df_(std::move(document_frequency)), idf_(df_.size(), 0.0), n_docs_(n_docs) {
  const double numerator = 1.0 + static_cast<double>(n_docs_);
  for (std::size_t t = 0; t < df_.size(); ++t) {
    if (df_[t] > 0) idf_[t] = std::log(numerator / (1.0 + df_[t])) + 1.0;
  }
}

IdfTable fit_idf(std::span<const TokenIds> documents) {
  if (documents.empty()) throw PreconditionError("fit_idf: no documents");
  TokenId max_id = 0;
  for (const auto& doc : documents) {
    for (auto t : doc) max_id = std::max(max_id, t);
  }
  std::vector<std::uint32_t> df(static_cast<std::size_t>(max_id) + 1, 0);
  std::vector<std::size_t> last_doc(df.size(), static_cast<std::size_t>(-1));
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (auto t : documents[d]) {
      if (last_doc[t] == d) continue;
      last_doc[t] = d;
      ++df[t];
    }
  }
  return IdfTable(std::move(df), documents.size());
}

SparseVector vectorize(std::span<const TokenId> tokens, const IdfTable& idf) {
  std::map<TokenId, std::size_t> counts;
  for (auto t : tokens) {
    if (idf.contains(t)) ++counts[t];
  }
  SparseVector v;
  if (counts.empty()) return v;
  std::vector<double> weights;
  weights.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [t, n] : counts) {
    const double w = static_cast<double>(n) * idf.idf(t);
    weights.push_back(w);
    norm2 += w * w;
  }
  const double norm = std::sqrt(norm2);
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  std::size_t i = 0;
  for (const auto& [t, n] : counts) {
    v.indices.push_back(t);
    v.values.push_back(static_cast<float>(weights[i++] / norm));
  }
  return v;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double acc = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      acc += static_cast<double>(a.values[i]) * static_cast<double>(b.values[j]);
      ++i;
      ++j;
    }
  }
  return acc;
}

std::vector<Scored> sparse_topk(const SparseVector& query, std::span<const SparseVector> index,
                                std::size_t k) {
  if (k < 1) throw ParameterError("sparse_topk: k must be at least 1");
  std::vector<float> scores(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    scores[i] = static_cast<float>(sparse_dot(query, index[i]));
  }
  return select_topk(scores, k);
}

TokenIds without_unk(std::span<const TokenId> tokens) {
  TokenIds out;
  out.reserve(tokens.size());
  for (auto t : tokens) {
    if (t != Vocabulary::kUnk) out.push_back(t);
  }
  return out;
}

void write_vectors(std::ostream& out, std::span<const std::uint64_t> doc_ids,
                   std::span<const SparseVector> vectors) {
  if (doc_ids.size() != vectors.size()) {
    throw DimensionError("write_vectors: ids and vectors differ in length");
  }
  for (std::size_t d = 0; d < vectors.size(); ++d) {
    out << doc_ids[d];
    for (std::size_t i = 0; i < vectors[d].nnz(); ++i) {
      out << fmt::format(" {}:{:.6f}", vectors[d].indices[i], vectors[d].values[i]);
    }
    out << '\n';
  }
}

}  // namespace maclr
