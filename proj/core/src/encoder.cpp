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

#include "maclr/encoder.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <spdlog/spdlog.h>

#include "maclr/errors.hpp"
#include "maclr/io.hpp"

namespace maclr {

template <typename T>
void EncoderParamsT<T>::validate() const {
  if (proj_weight.rows() != embed_table.cols()) {
    throw DimensionError("projection rows (" + std::to_string(proj_weight.rows()) +
                         ") must equal token dim (" + std::to_string(embed_table.cols()) + ")");
  }
  if (proj_bias.size() != proj_weight.cols()) {
    throw DimensionError("projection bias length must equal embedding dim");
  }
  if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
    throw ParameterError("dropout rate must lie in [0, 1)");
  }
  if (!embed_table.all_finite() || !proj_weight.all_finite() ||
      !std::all_of(proj_bias.begin(), proj_bias.end(), [](T v) { return std::isfinite(v); })) {
    throw NumericError("encoder parameters contain non-finite values");
  }
}

EncoderParams init_encoder(std::size_t vocab_size, std::size_t token_dim, std::size_t embed_dim,
                           float dropout_rate, Rng& rng) {
  if (vocab_size == 0 || token_dim == 0 || embed_dim == 0) {
    throw ParameterError("encoder dimensions must be positive");
  }
  EncoderParams p;
  p.embed_table = DenseMatrix(vocab_size, token_dim);
  for (auto& v : p.embed_table.data()) v = static_cast<float>(rng.uniform() * 0.1 - 0.05);
  p.proj_weight = DenseMatrix(token_dim, embed_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(token_dim));
  for (auto& v : p.proj_weight.data()) v = static_cast<float>(rng.normal() * scale);
  p.proj_bias.assign(embed_dim, 0.0f);
  p.dropout_rate = dropout_rate;
  p.validate();
  return p;
}

namespace {

// Sum in ascending token order so the mean is bitwise invariant to token order.
template <typename T>
std::vector<T> mean_pool(const Matrix<T>& table, std::span<const TokenId> tokens) {
  std::vector<T> pooled(table.cols(), T{0});
  if (tokens.empty()) return pooled;
  TokenIds sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> acc(table.cols(), 0.0);
  for (auto t : sorted) {
    if (t >= table.rows()) {
      throw RangeError("token id " + std::to_string(t) + " outside vocabulary of size " +
                       std::to_string(table.rows()));
    }
    auto row = table.row(t);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(row[i]);
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  for (std::size_t i = 0; i < acc.size(); ++i) pooled[i] = static_cast<T>(acc[i] * inv_n);
  return pooled;
}

}  // namespace

template <typename T>
ForwardTrace<T> encode_with_mask(const EncoderParamsT<T>& params, std::span<const TokenId> tokens,
                                 std::span<const T> mask) {
  const std::size_t de = params.token_dim();
  const std::size_t d = params.embed_dim();
  if (!mask.empty() && mask.size() != de) {
    throw DimensionError("dropout mask length " + std::to_string(mask.size()) +
                         " does not match token dim " + std::to_string(de));
  }
  ForwardTrace<T> trace;
  trace.tokens.assign(tokens.begin(), tokens.end());
  trace.pooled = mean_pool(params.embed_table, tokens);
  if (mask.empty()) {
    trace.mask.assign(de, T{1});
  } else {
    trace.mask.assign(mask.begin(), mask.end());
  }
  trace.output.assign(params.proj_bias.begin(), params.proj_bias.end());
  for (std::size_t i = 0; i < de; ++i) {
    const T x = trace.pooled[i] * trace.mask[i];
    if (x == T{0}) continue;
    auto w = params.proj_weight.row(i);
    for (std::size_t j = 0; j < d; ++j) trace.output[j] += x * w[j];
  }
  return trace;
}

template <typename T>
std::vector<T> encode(const EncoderParamsT<T>& params, std::span<const TokenId> tokens) {
  return encode_with_mask<T>(params, tokens, {}).output;
}

template <typename T>
ForwardTrace<T> encode_train(const EncoderParamsT<T>& params, std::span<const TokenId> tokens,
                             Rng& rng) {
  const auto mask = dropout_mask<T>(rng, params.token_dim(), params.dropout_rate);
  return encode_with_mask<T>(params, tokens, mask);
}

template <typename T>
std::pair<ForwardTrace<T>, ForwardTrace<T>> encode_pair_dropout(const EncoderParamsT<T>& params,
                                                                std::span<const TokenId> tokens,
                                                                Rng& rng) {
  static std::atomic<bool> warned{false};
  if (params.dropout_rate == 0.0f && !warned.exchange(true)) {
    spdlog::warn("paired dropout with rate 0 yields identical embeddings");
  }
  auto first = encode_train(params, tokens, rng);
  auto second = encode_train(params, tokens, rng);
  return {std::move(first), std::move(second)};
}

template <typename T>
EncoderGrads<T> EncoderGrads<T>::zeros_like(const EncoderParamsT<T>& params) {
  EncoderGrads g;
  g.embed_table = Matrix<T>(params.embed_table.rows(), params.embed_table.cols());
  g.proj_weight = Matrix<T>(params.proj_weight.rows(), params.proj_weight.cols());
  g.proj_bias.assign(params.proj_bias.size(), T{0});
  g.is_touched_.assign(params.embed_table.rows(), false);
  return g;
}

template <typename T>
void EncoderGrads<T>::touch(TokenId row) {
  if (row >= is_touched_.size()) is_touched_.resize(embed_table.rows(), false);
  if (!is_touched_[row]) {
    is_touched_[row] = true;
    touched.push_back(row);
  }
}

template <typename T>
void EncoderGrads<T>::zero() {
  for (auto t : touched) {
    auto r = embed_table.row(t);
    std::fill(r.begin(), r.end(), T{0});
    is_touched_[t] = false;
  }
  touched.clear();
  proj_weight.fill(T{0});
  std::fill(proj_bias.begin(), proj_bias.end(), T{0});
}

template <typename T>
void encode_backward(const ForwardTrace<T>& trace, const EncoderParamsT<T>& params,
                     std::span<const T> grad_out, EncoderGrads<T>& grads) {
  const std::size_t de = params.token_dim();
  const std::size_t d = params.embed_dim();
  if (grad_out.size() != d || trace.pooled.size() != de || trace.mask.size() != de ||
      grads.proj_weight.rows() != de || grads.proj_weight.cols() != d ||
      grads.embed_table.rows() != params.vocab_size()) {
    throw DimensionError("encode_backward: shape mismatch");
  }
  for (std::size_t j = 0; j < d; ++j) grads.proj_bias[j] += grad_out[j];
  std::vector<T> grad_pooled(de, T{0});
  for (std::size_t i = 0; i < de; ++i) {
    const T masked = trace.pooled[i] * trace.mask[i];
    auto w = params.proj_weight.row(i);
    auto gw = grads.proj_weight.row(i);
    T acc{0};
    for (std::size_t j = 0; j < d; ++j) {
      gw[j] += masked * grad_out[j];
      acc += w[j] * grad_out[j];
    }
    grad_pooled[i] = acc * trace.mask[i];
  }
  if (trace.tokens.empty()) return;
  const T inv_n = T{1} / static_cast<T>(trace.tokens.size());
  for (auto t : trace.tokens) {
    grads.touch(t);
    auto row = grads.embed_table.row(t);
    for (std::size_t i = 0; i < de; ++i) row[i] += grad_pooled[i] * inv_n;
  }
}

DenseMatrix encode_batch(const EncoderParams& params, std::span<const TokenIds> sequences,
                         std::size_t workers) {
  DenseMatrix out(sequences.size(), params.embed_dim());
  parallel_for(sequences.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto e = encode(params, sequences[i]);
      std::copy(e.begin(), e.end(), out.row(i).begin());
    }
  });
  return out;
}

#define MACLR_INSTANTIATE_ENCODER(T)                                                         \
  template struct EncoderParamsT<T>;                                                         \
  template struct EncoderGrads<T>;                                                           \
  template ForwardTrace<T> encode_with_mask(const EncoderParamsT<T>&,                        \
                                            std::span<const TokenId>, std::span<const T>);   \
  template std::vector<T> encode(const EncoderParamsT<T>&, std::span<const TokenId>);        \
  template ForwardTrace<T> encode_train(const EncoderParamsT<T>&, std::span<const TokenId>,  \
                                        Rng&);                                               \
  template std::pair<ForwardTrace<T>, ForwardTrace<T>> encode_pair_dropout(                  \
      const EncoderParamsT<T>&, std::span<const TokenId>, Rng&);                             \
  template void encode_backward(const ForwardTrace<T>&, const EncoderParamsT<T>&,            \
                                std::span<const T>, EncoderGrads<T>&);

MACLR_INSTANTIATE_ENCODER(float)
MACLR_INSTANTIATE_ENCODER(double)
#undef MACLR_INSTANTIATE_ENCODER

namespace {

constexpr char kMagic[4] = {'M', 'A', 'C', 'L'};

template <typename U>
void put(std::ostream& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(U)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(U));
  }
}

template <typename U>
U take(const std::vector<char>& buf, std::size_t& pos, const std::string& path) {
  if (buf.size() - pos < sizeof(U)) throw FormatError(path + ": truncated checkpoint");
  std::array<char, sizeof(U)> bytes;
  std::memcpy(bytes.data(), buf.data() + pos, sizeof(U));
  pos += sizeof(U);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<U>(bytes);
}

void put_floats(std::ostream& out, std::span<const float> values) {
  for (float v : values) put(out, v);
}

void take_floats(const std::vector<char>& buf, std::size_t& pos, const std::string& path,
                 std::span<float> values) {
  for (auto& v : values) v = take<float>(buf, pos, path);
}

}  // namespace

void save_checkpoint(const EncoderParams& params, std::uint64_t vocab_hash,
                     const std::filesystem::path& path) {
  params.validate();
  write_atomic(path, [&](std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.vocab_size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.token_dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.embed_dim()));
    put<float>(out, params.dropout_rate);
    put<std::uint64_t>(out, vocab_hash);
    put_floats(out, params.embed_table.data());
    put_floats(out, params.proj_weight.data());
    put_floats(out, params.proj_bias);
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
  const auto name = path.string();
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(name + ": bad checkpoint magic");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = take<std::uint32_t>(buf, pos, name);
  if (version != kCheckpointVersion) {
    throw FormatError(name + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto vocab = take<std::uint32_t>(buf, pos, name);
  const auto token_dim = take<std::uint32_t>(buf, pos, name);
  const auto embed_dim = take<std::uint32_t>(buf, pos, name);
  const auto rate = take<float>(buf, pos, name);
  const auto hash = take<std::uint64_t>(buf, pos, name);
  const std::uint64_t floats = std::uint64_t{vocab} * token_dim +
                               std::uint64_t{token_dim} * embed_dim + embed_dim;
  if (buf.size() - pos != floats * sizeof(float)) {
    throw FormatError(name + ": checkpoint payload size does not match its header");
  }
  if (expected_vocab_hash && *expected_vocab_hash != hash) {
    throw CompatibilityError(name + ": checkpoint was trained with a different vocabulary");
  }
  Checkpoint ck;
  ck.vocab_hash = hash;
  ck.params.embed_table = DenseMatrix(vocab, token_dim);
  ck.params.proj_weight = DenseMatrix(token_dim, embed_dim);
  ck.params.proj_bias.assign(embed_dim, 0.0f);
  ck.params.dropout_rate = rate;
  take_floats(buf, pos, name, ck.params.embed_table.data());
  take_floats(buf, pos, name, ck.params.proj_weight.data());
  take_floats(buf, pos, name, ck.params.proj_bias);
  try {
    ck.params.validate();
  } catch (const Error& e) {
    throw FormatError(name + ": " + e.what());
  }
  return ck;
}

}  // namespace maclr
