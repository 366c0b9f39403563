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

#ifndef MACLR_TFIDF_HPP_
#define MACLR_TFIDF_HPP_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "maclr/corpus.hpp"
#include "maclr/numkit.hpp"

namespace maclr {

// Sorted token ids with unit-L2 values (or empty).
struct SparseVector {
  std::vector<TokenId> indices;
  std::vector<float> values;

  bool empty() const noexcept { return indices.empty(); }
  std::size_t nnz() const noexcept { return indices.size(); }
};

// Smoothed idf: ln((1 + n_docs) / (1 + df)) + 1, defined for tokens with df > 0.
class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::vector<std::uint32_t> document_frequency, std::size_t n_docs);

  std::size_t n_docs() const noexcept { return n_docs_; }
  std::size_t vocab_size() const noexcept { return df_.size(); }
  bool contains(TokenId t) const noexcept { return t < df_.size() && df_[t] > 0; }
  std::uint32_t df(TokenId t) const noexcept { return t < df_.size() ? df_[t] : 0; }
  // 0 for tokens never seen in a fitted document.
  double idf(TokenId t) const noexcept { return contains(t) ? idf_[t] : 0.0; }

 private:
  std::vector<std::uint32_t> df_;
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
};

IdfTable fit_idf(std::span<const TokenIds> documents);

// Raw term count times idf, L2-normalised; tokens unseen at fit time are dropped.
SparseVector vectorize(std::span<const TokenId> tokens, const IdfTable& idf);

double sparse_dot(const SparseVector& a, const SparseVector& b);

// Exhaustive top-k by dot product; ids are positions in `index`.
std::vector<Scored> sparse_topk(const SparseVector& query, std::span<const SparseVector> index,
                                std::size_t k);

// Removes UNK (id 0), which pools every rare token and carries no signal.
TokenIds without_unk(std::span<const TokenId> tokens);

// "doc_id token_id:value ..." with six decimal digits.
void write_vectors(std::ostream& out, std::span<const std::uint64_t> doc_ids,
                   std::span<const SparseVector> vectors);

}  // namespace maclr

#endif  // MACLR_TFIDF_HPP_
