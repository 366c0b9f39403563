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

#ifndef MACLR_NUMKIT_HPP_
#define MACLR_NUMKIT_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maclr/errors.hpp"

namespace maclr {

// Row-major dense matrix. Model state uses Matrix<float>; gradient checks
// instantiate the same code paths with double.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Matrix<U> cast() const {
    return Matrix<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using DenseMatrix = Matrix<float>;

// Splits [0, count) into at most `workers` contiguous shards and runs
// fn(begin, end) on each. Shard boundaries never change per-item results.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// a * b
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b, std::size_t workers = 1);
// a * b^T
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b, std::size_t workers = 1);
// a^T * b
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
T dot(std::span<const T> a, std::span<const T> b);

// Seeded generator. Each purpose (init, dropout, sampling, ...) gets its own
// stream so that adding draws in one place never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng stream(std::uint64_t seed, std::string_view purpose);

  double uniform();                     // [0, 1)
  std::size_t below(std::size_t n);     // [0, n)
  double normal();                      // N(0, 1)
  std::uint64_t bits() { return engine_(); }

  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Inverted dropout: each entry is 0 with probability `rate`, else 1/(1-rate).
template <typename T>
std::vector<T> dropout_mask(Rng& rng, std::size_t len, double rate);

struct AdamState {
  DenseMatrix first_moment;
  DenseMatrix second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::string block;  // parameter block name used in error messages

  static AdamState for_shape(std::size_t rows, std::size_t cols, std::string block);
};

// One bias-corrected Adam update. Throws NumericError naming the block when a
// gradient entry is not finite; nothing is modified in that case.
void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state, double lr);

struct LrSchedule {
  double base_lr = 1e-5;
  std::uint64_t warmup_steps = 0;
  std::uint64_t total_steps = 1;

  static LrSchedule from_ratio(double base_lr, double warmup_ratio, std::uint64_t total_steps);
  void validate() const;
};

// Linear warm-up from 0 to base_lr, then linear decay to 0 at total_steps.
double lr_at(const LrSchedule& schedule, std::uint64_t step);

// A scored id; ranking order is score descending, then id ascending.
struct Scored {
  std::uint64_t id = 0;
  float score = 0.0f;

  friend bool operator==(const Scored&, const Scored&) = default;
};

inline bool ranks_before(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

// Top-k of scores[i] with id ids[i] (or i when ids is empty).
std::vector<Scored> select_topk(std::span<const float> scores, std::size_t k,
                                std::span<const std::uint64_t> ids = {});

}  // namespace maclr

#endif  // MACLR_NUMKIT_HPP_
