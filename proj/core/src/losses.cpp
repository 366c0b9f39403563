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

#include "maclr/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <spdlog/spdlog.h>

#include "maclr/errors.hpp"

namespace maclr {

namespace {

template <typename T>
void check_logits(const Matrix<T>& logits) {
  if (!logits.all_finite()) throw NumericError("non-finite logit in loss computation");
}

// Stable log-sum-exp of a row; fills `probs` with the softmax.
template <typename T>
T log_softmax_row(std::span<const T> row, std::span<T> probs) {
  const T peak = *std::max_element(row.begin(), row.end());
  T sum{0};
  for (std::size_t j = 0; j < row.size(); ++j) {
    probs[j] = std::exp(row[j] - peak);
    sum += probs[j];
  }
  for (auto& p : probs) p /= sum;
  return peak + std::log(sum);
}

template <typename T>
Matrix<T> scaled_logits(const Matrix<T>& a, const Matrix<T>& b, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  auto s = matmul_nt(a, b);
  if (temperature != 1.0) {
    const T inv = static_cast<T>(1.0 / temperature);
    for (auto& v : s.data()) v *= inv;
  }
  return s;
}

template <typename T>
void check_pair_shapes(const Matrix<T>& x, const Matrix<T>& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("instance and label batches must have the same shape");
  }
  if (x.rows() == 0) throw PreconditionError("empty batch");
  static std::atomic<bool> warned{false};
  if (x.rows() == 1 && !warned.exchange(true)) {
    spdlog::warn("contrastive loss with a batch of 1 is identically zero");
  }
}

// dX = dS Y / tau, dY = dS^T X / tau
template <typename T>
PairLoss<T> backprop_pair(const LogitLoss<T>& l, const Matrix<T>& x, const Matrix<T>& y,
                          double temperature) {
  PairLoss<T> out;
  out.value = l.value;
  out.grad_x = matmul(l.grad_logits, y);
  out.grad_y = matmul_tn(l.grad_logits, x);
  if (temperature != 1.0) {
    const T inv = static_cast<T>(1.0 / temperature);
    for (auto& v : out.grad_x.data()) v *= inv;
    for (auto& v : out.grad_y.data()) v *= inv;
  }
  return out;
}

}  // namespace

template <typename T>
LogitLoss<T> diagonal_xent(const Matrix<T>& logits) {
  if (logits.rows() > logits.cols()) {
    throw DimensionError("diagonal_xent needs at least as many columns as rows");
  }
  check_logits(logits);
  LogitLoss<T> out;
  out.grad_logits = Matrix<T>(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto probs = out.grad_logits.row(i);
    const T lse = log_softmax_row(logits.row(i), probs);
    out.value += lse - logits(i, i);
    probs[i] -= T{1};
  }
  return out;
}

template <typename T>
LogitLoss<T> multi_positive_xent(const Matrix<T>& logits, const PositiveSets& positives) {
  if (positives.size() != logits.rows()) {
    throw DimensionError("one positive set per logit row is required");
  }
  check_logits(logits);
  LogitLoss<T> out;
  out.grad_logits = Matrix<T>(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto& pos = positives[i];
    if (pos.empty()) {
      throw PreconditionError("positive set of row " + std::to_string(i) + " is empty");
    }
    auto probs = out.grad_logits.row(i);
    const T lse = log_softmax_row(logits.row(i), probs);
    const T weight = T{1} / static_cast<T>(pos.size());
    T pos_mean{0};
    for (auto p : pos) {
      if (p >= logits.cols()) throw RangeError("positive index outside the logit row");
      pos_mean += logits(i, p);
      probs[p] -= weight;
    }
    out.value += lse - pos_mean * weight;
  }
  return out;
}

template <typename T>
PairLoss<T> loss_contrastive(const Matrix<T>& x, const Matrix<T>& y, double temperature) {
  check_pair_shapes(x, y);
  const auto logits = scaled_logits(x, y, temperature);
  return backprop_pair(diagonal_xent(logits), x, y, temperature);
}

template <typename T>
PairLoss<T> loss_cluster(const Matrix<T>& x, const Matrix<T>& y, const PositiveSets& positives,
                         double temperature) {
  check_pair_shapes(x, y);
  if (positives.size() != x.rows()) throw DimensionError("one positive set per batch row");
  for (std::size_t i = 0; i < positives.size(); ++i) {
    if (std::find(positives[i].begin(), positives[i].end(), i) == positives[i].end()) {
      throw PreconditionError("positive set of row " + std::to_string(i) +
                              " must contain the row itself");
    }
  }
  const auto logits = scaled_logits(x, y, temperature);
  return backprop_pair(multi_positive_xent(logits, positives), x, y, temperature);
}

template <typename T>
LabelLoss<T> loss_label(const Matrix<T>& h, const Matrix<T>& h_plus, const Matrix<T>& negatives,
                        double temperature) {
  if (h.rows() != h_plus.rows() || h.cols() != h_plus.cols()) {
    throw DimensionError("dropout twin batches must have the same shape");
  }
  if (negatives.rows() < 1) throw PreconditionError("label regularisation needs M >= 1");
  if (negatives.cols() != h.cols()) throw DimensionError("label embedding width mismatch");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  const std::size_t n = h.rows();
  const std::size_t m = negatives.rows();
  const T inv = static_cast<T>(1.0 / temperature);

  // Column 0 holds h_i . h_i+, columns 1..M hold h_i . y_j.
  Matrix<T> logits(n, m + 1);
  const auto neg = matmul_nt(h, negatives);
  for (std::size_t i = 0; i < n; ++i) {
    logits(i, 0) = dot<T>(h.row(i), h_plus.row(i)) * inv;
    for (std::size_t j = 0; j < m; ++j) logits(i, j + 1) = neg(i, j) * inv;
  }
  const PositiveSets first_column(n, std::vector<std::size_t>{0});
  const auto l = multi_positive_xent(logits, first_column);

  LabelLoss<T> out;
  out.value = l.value;
  out.grad_h = Matrix<T>(n, h.cols());
  out.grad_h_plus = Matrix<T>(n, h.cols());
  out.grad_negatives = Matrix<T>(m, h.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const T g0 = l.grad_logits(i, 0) * inv;
    auto gh = out.grad_h.row(i);
    auto ghp = out.grad_h_plus.row(i);
    auto hi = h.row(i);
    auto hpi = h_plus.row(i);
    for (std::size_t c = 0; c < h.cols(); ++c) {
      gh[c] += g0 * hpi[c];
      ghp[c] += g0 * hi[c];
    }
    for (std::size_t j = 0; j < m; ++j) {
      const T gj = l.grad_logits(i, j + 1) * inv;
      auto yj = negatives.row(j);
      auto gy = out.grad_negatives.row(j);
      for (std::size_t c = 0; c < h.cols(); ++c) {
        gh[c] += gj * yj[c];
        gy[c] += gj * hi[c];
      }
    }
  }
  return out;
}

#define MACLR_INSTANTIATE_LOSSES(T)                                                       \
  template LogitLoss<T> diagonal_xent(const Matrix<T>&);                                  \
  template LogitLoss<T> multi_positive_xent(const Matrix<T>&, const PositiveSets&);       \
  template PairLoss<T> loss_contrastive(const Matrix<T>&, const Matrix<T>&, double);      \
  template PairLoss<T> loss_cluster(const Matrix<T>&, const Matrix<T>&, const PositiveSets&, \
                                    double);                                              \
  template LabelLoss<T> loss_label(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, double);

MACLR_INSTANTIATE_LOSSES(float)
MACLR_INSTANTIATE_LOSSES(double)
#undef MACLR_INSTANTIATE_LOSSES

}  // namespace maclr
