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

#ifndef MACLR_LOSSES_HPP_
#define MACLR_LOSSES_HPP_

#include "maclr/clustering.hpp"
#include "maclr/numkit.hpp"

namespace maclr {

// All losses are sums over the batch (not means) and use raw inner-product
// logits divided by `temperature` (1 by default).

template <typename T>
struct LogitLoss {
  T value{};
  Matrix<T> grad_logits;
};

template <typename T>
struct PairLoss {
  T value{};
  Matrix<T> grad_x;
  Matrix<T> grad_y;
};

template <typename T>
struct LabelLoss {
  T value{};
  Matrix<T> grad_h;
  Matrix<T> grad_h_plus;
  Matrix<T> grad_negatives;
};

// sum_i [ logsumexp_j S_ij - S_ii ]
template <typename T>
LogitLoss<T> diagonal_xent(const Matrix<T>& logits);

// sum_i [ logsumexp_j S_ij - mean_{p in P(i)} S_ip ]
template <typename T>
LogitLoss<T> multi_positive_xent(const Matrix<T>& logits, const PositiveSets& positives);

// In-batch contrastive loss over S = X Y^T with the diagonal as positives.
template <typename T>
PairLoss<T> loss_contrastive(const Matrix<T>& x, const Matrix<T>& y, double temperature = 1.0);

// Supervised contrastive loss: row i's positives are the titles in P(i).
// Every P(i) must be non-empty and contain i.
template <typename T>
PairLoss<T> loss_cluster(const Matrix<T>& x, const Matrix<T>& y, const PositiveSets& positives,
                         double temperature = 1.0);

// Label regularisation: h_i against its dropout twin h_i+ and M sampled
// label embeddings.
template <typename T>
LabelLoss<T> loss_label(const Matrix<T>& h, const Matrix<T>& h_plus, const Matrix<T>& negatives,
                        double temperature = 1.0);

template <typename T>
struct Stage1Loss {
  T total{};
  T cluster{};
  T label{};
};

// Unweighted sum; gradients add the same way.
template <typename T>
Stage1Loss<T> loss_stage1(T cluster_part, T label_part) {
  return {cluster_part + label_part, cluster_part, label_part};
}

}  // namespace maclr

#endif  // MACLR_LOSSES_HPP_
