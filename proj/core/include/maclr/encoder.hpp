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

#ifndef MACLR_ENCODER_HPP_
#define MACLR_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "maclr/corpus.hpp"
#include "maclr/numkit.hpp"

namespace maclr {

// Bag-of-embeddings sentence encoder shared by instances and labels:
//   output = (mean of token rows) * dropout_mask * proj_weight + proj_bias
template <typename T>
struct EncoderParamsT {
  Matrix<T> embed_table;      // V x token_dim
  Matrix<T> proj_weight;      // token_dim x embed_dim
  std::vector<T> proj_bias;   // embed_dim
  float dropout_rate = 0.1f;

  std::size_t vocab_size() const noexcept { return embed_table.rows(); }
  std::size_t token_dim() const noexcept { return embed_table.cols(); }
  std::size_t embed_dim() const noexcept { return proj_weight.cols(); }

  void validate() const;

  template <typename U>
  EncoderParamsT<U> cast() const {
    return {embed_table.template cast<U>(), proj_weight.template cast<U>(),
            std::vector<U>(proj_bias.begin(), proj_bias.end()), dropout_rate};
  }

  friend bool operator==(const EncoderParamsT&, const EncoderParamsT&) = default;
};

using EncoderParams = EncoderParamsT<float>;

// Embedding rows ~ U[-0.05, 0.05], projection ~ N(0, 1/token_dim), zero bias.
EncoderParams init_encoder(std::size_t vocab_size, std::size_t token_dim, std::size_t embed_dim,
                           float dropout_rate, Rng& rng);

template <typename T>
struct ForwardTrace {
  TokenIds tokens;
  std::vector<T> pooled;  // mean token embedding, before dropout
  std::vector<T> mask;    // dropout mask (all ones in eval mode)
  std::vector<T> output;
};

// Forward pass with an explicit mask; an empty mask means eval mode.
template <typename T>
ForwardTrace<T> encode_with_mask(const EncoderParamsT<T>& params, std::span<const TokenId> tokens,
                                 std::span<const T> mask);

// Eval mode: no dropout.
template <typename T>
std::vector<T> encode(const EncoderParamsT<T>& params, std::span<const TokenId> tokens);

// Train mode: draws a fresh mask from `rng`.
template <typename T>
ForwardTrace<T> encode_train(const EncoderParamsT<T>& params, std::span<const TokenId> tokens,
                             Rng& rng);

// Two train-mode passes over the same input with independent masks.
template <typename T>
std::pair<ForwardTrace<T>, ForwardTrace<T>> encode_pair_dropout(const EncoderParamsT<T>& params,
                                                                std::span<const TokenId> tokens,
                                                                Rng& rng);

// Gradient accumulator. Only rows listed in `touched` may be non-zero in
// embed_table.
template <typename T>
struct EncoderGrads {
  Matrix<T> embed_table;
  Matrix<T> proj_weight;
  std::vector<T> proj_bias;
  std::vector<TokenId> touched;

  static EncoderGrads zeros_like(const EncoderParamsT<T>& params);
  void touch(TokenId row);
  void zero();

 private:
  std::vector<bool> is_touched_;
};

// Adds d(grad_out . output)/d(params) into `grads`.
template <typename T>
void encode_backward(const ForwardTrace<T>& trace, const EncoderParamsT<T>& params,
                     std::span<const T> grad_out, EncoderGrads<T>& grads);

// Eval-mode embeddings for many sequences, one row each.
DenseMatrix encode_batch(const EncoderParams& params, std::span<const TokenIds> sequences,
                         std::size_t workers = 1);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderParams params;
  std::uint64_t vocab_hash = 0;
};

// Layout: "MACL", u32 version, u32 V, u32 token_dim, u32 embed_dim,
// f32 dropout_rate, u64 vocab hash, then embed_table, proj_weight and
// proj_bias as little-endian f32.
void save_checkpoint(const EncoderParams& params, std::uint64_t vocab_hash,
                     const std::filesystem::path& path);

// Throws FormatError on bad magic/version/size, CompatibilityError when
// expected_vocab_hash is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace maclr

#endif  // MACLR_ENCODER_HPP_
