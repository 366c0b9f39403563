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

#include "maclr/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <mutex>
#include <thread>
#include <unordered_set>

namespace maclr {

template <typename T>
bool Matrix<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class Matrix<float>;
template class Matrix<double>;

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&](std::size_t begin, std::size_t end) {
    try {
      fn(begin, end);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(run, begin, end);
  }
  run(0, std::min(count, chunk));
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

void require_shape(bool ok, const char* op, std::size_t ar, std::size_t ac, std::size_t br,
                   std::size_t bc) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + std::to_string(ar) + "x" +
                         std::to_string(ac) + " and " + std::to_string(br) + "x" +
                         std::to_string(bc));
  }
}

}  // namespace

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b, std::size_t workers) {
  require_shape(a.cols() == b.rows(), "matmul", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<T> c(a.rows(), b.cols());
  // i-k-j order: each output row accumulates in a fixed k order.
  parallel_for(a.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto out = c.row(i);
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const T aik = a(i, k);
        if (aik == T{0}) continue;
        auto brow = b.row(k);
        for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
      }
    }
  });
  return c;
}

template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b, std::size_t workers) {
  require_shape(a.cols() == b.cols(), "matmul_nt", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<T> c(a.rows(), b.rows());
  parallel_for(a.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot<T>(a.row(i), b.row(j));
    }
  });
  return c;
}

template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<T> c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T aki = arow[i];
      if (aki == T{0}) continue;
      auto out = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aki * brow[j];
    }
  }
  return c;
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  T acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template Matrix<float> matmul(const Matrix<float>&, const Matrix<float>&, std::size_t);
template Matrix<double> matmul(const Matrix<double>&, const Matrix<double>&, std::size_t);
template Matrix<float> matmul_nt(const Matrix<float>&, const Matrix<float>&, std::size_t);
template Matrix<double> matmul_nt(const Matrix<double>&, const Matrix<double>&, std::size_t);
template Matrix<float> matmul_tn(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> matmul_tn(const Matrix<double>&, const Matrix<double>&);
template float dot(std::span<const float>, std::span<const float>);
template double dot(std::span<const double>, std::span<const double>);

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t seed, std::string_view purpose) {
  // FNV-1a of the purpose tag, mixed with the user seed.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 1099511628211ull;
  }
  Rng rng(0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() {
  // 53 random bits -> [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw ParameterError("Rng::below: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::normal() { return normal_(engine_); }

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) {
    throw ParameterError("cannot sample " + std::to_string(k) + " distinct items from " +
                         std::to_string(n));
  }
  if (k * 8 < n) {
    // Sparse draw: rejection against the (small) picked set.
    std::vector<std::size_t> picked;
    std::unordered_set<std::size_t> seen;
    picked.reserve(k);
    while (picked.size() < k) {
      const std::size_t c = below(n);
      if (seen.insert(c).second) picked.push_back(c);
    }
    return picked;
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

template <typename T>
std::vector<T> dropout_mask(Rng& rng, std::size_t len, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  std::vector<T> mask(len, T{1});
  if (rate == 0.0) return mask;
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& m : mask) m = rng.uniform() < rate ? T{0} : keep;
  return mask;
}

template std::vector<float> dropout_mask(Rng&, std::size_t, double);
template std::vector<double> dropout_mask(Rng&, std::size_t, double);

AdamState AdamState::for_shape(std::size_t rows, std::size_t cols, std::string block) {
  AdamState s;
  s.first_moment = DenseMatrix(rows, cols);
  s.second_moment = DenseMatrix(rows, cols);
  s.block = std::move(block);
  return s;
}

void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state, double lr) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols() ||
      state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: shape mismatch in block '" + state.block + "'");
  }
  if (!(lr >= 0.0)) throw ParameterError("adam_step: negative learning rate");
  if (!(state.beta1 > 0.0 && state.beta1 < 1.0 && state.beta2 > 0.0 && state.beta2 < 1.0)) {
    throw ParameterError("adam_step: betas must lie in (0, 1)");
  }
  const auto g = grads.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericError("non-finite gradient in parameter block '" + state.block +
                         "' at flat index " + std::to_string(i));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  auto p = params.data();
  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
    const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double m_hat = mi / bias1;
    const double v_hat = vi / bias2;
    p[i] = static_cast<float>(p[i] - lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
  }
}

LrSchedule LrSchedule::from_ratio(double base_lr, double warmup_ratio, std::uint64_t total_steps) {
  LrSchedule s;
  s.base_lr = base_lr;
  s.total_steps = total_steps;
  s.warmup_steps = static_cast<std::uint64_t>(std::llround(warmup_ratio * total_steps));
  s.validate();
  return s;
}

void LrSchedule::validate() const {
  if (!(base_lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (warmup_steps > total_steps) {
    throw ParameterError("warmup_steps (" + std::to_string(warmup_steps) +
                         ") exceeds total_steps (" + std::to_string(total_steps) + ")");
  }
}

double lr_at(const LrSchedule& schedule, std::uint64_t step) {
  if (step > schedule.total_steps) {
    throw RangeError("lr_at: step " + std::to_string(step) + " beyond total_steps " +
                     std::to_string(schedule.total_steps));
  }
  if (step <= schedule.warmup_steps) {
    if (schedule.warmup_steps == 0) return schedule.base_lr;
    return schedule.base_lr * static_cast<double>(step) /
           static_cast<double>(schedule.warmup_steps);
  }
  const double remaining = static_cast<double>(schedule.total_steps - step);
  const double span = static_cast<double>(schedule.total_steps - schedule.warmup_steps);
  return schedule.base_lr * remaining / span;
}

std::vector<Scored> select_topk(std::span<const float> scores, std::size_t k,
                                std::span<const std::uint64_t> ids) {
  if (!ids.empty() && ids.size() != scores.size()) {
    throw DimensionError("select_topk: ids and scores differ in length");
  }
  std::vector<Scored> all(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    all[i] = Scored{ids.empty() ? i : ids[i], scores[i]};
  }
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    ranks_before);
  all.resize(k);
  return all;
}

}  // namespace maclr
