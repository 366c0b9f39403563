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


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "maclr/clustering.hpp"
#include "maclr/losses.hpp"
#include "test_support.hpp"

namespace maclr {
namespace {

using M64 = Matrix<double>;

double row_dot(const M64& a, std::size_t i, const M64& b, std::size_t j) {
  double s = 0;
  for (std::size_t c = 0; c < a.cols(); ++c) s += a(i, c) * b(j, c);
  return s;
}

// Direct evaluations of the three objectives, written from the formulas
// without log-sum-exp shifting.
double direct_contrastive(const M64& x, const M64& y) {
  double loss = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double denom = 0;
    for (std::size_t j = 0; j < y.rows(); ++j) denom += std::exp(row_dot(x, i, y, j));
    loss -= std::log(std::exp(row_dot(x, i, y, i)) / denom);
  }
  return loss;
}

double direct_cluster(const M64& x, const M64& y, const PositiveSets& p) {
  double loss = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double denom = 0;
    for (std::size_t j = 0; j < y.rows(); ++j) denom += std::exp(row_dot(x, i, y, j));
    double inner = 0;
    for (auto q : p[i]) inner += std::log(std::exp(row_dot(x, i, y, q)) / denom);
    loss -= inner / double(p[i].size());
  }
  return loss;
}

double direct_label(const M64& h, const M64& hp, const M64& neg) {
  double loss = 0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double pos = std::exp(row_dot(h, i, hp, i));
    double denom = pos;
    for (std::size_t j = 0; j < neg.rows(); ++j) denom += std::exp(row_dot(h, i, neg, j));
    loss -= std::log(pos / denom);
  }
  return loss;
}

PositiveSets random_clusters(std::mt19937_64& g, std::size_t n) {
  std::vector<std::uint64_t> keys(n);
  const auto groups = testing::pick(g, 1, n);
  for (auto& k : keys) k = testing::pick(g, 0, groups - 1);
  return positives_from_keys(keys);
}

// Central differences of f over every entry of m, compared with `analytic`.
template <typename F>
void expect_fd(M64& m, const M64& analytic, F f, const std::string& what) {
  constexpr double h = 1e-3;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double keep = m.data()[i];
    m.data()[i] = keep + h;
    const double plus = f();
    m.data()[i] = keep - h;
    const double minus = f();
    m.data()[i] = keep;
    const double numeric = (plus - minus) / (2 * h);
    EXPECT_TRUE(testing::rel_close(analytic.data()[i], numeric, 1e-3, 1e-7))
        << what << "[" << i << "] analytic " << analytic.data()[i] << " numeric " << numeric;
  }
}

TEST(Contrastive, ZeroEmbeddingsGiveNLnN) {
  for (std::size_t n : {2, 5, 8}) {
    const M64 z(n, 3);
    EXPECT_NEAR(loss_contrastive(z, z).value, n * std::log(double(n)), 1e-12);
  }
}

TEST(Contrastive, SaturatedDiagonal) {
  // x_i·y_j = 40 on the diagonal, 0 elsewhere
  M64 x = M64::identity(4), y = M64::identity(4);
  for (std::size_t i = 0; i < 4; ++i) y(i, i) = 40;
  EXPECT_LT(loss_contrastive(x, y).value, 1e-10);
}

TEST(Contrastive, RandomMatchesDirectAndFiniteDifferences) {
  auto g = testing::gen(1);
  auto x = testing::random_matrix<double>(g, 5, 3);
  auto y = testing::random_matrix<double>(g, 5, 3);
  auto r = loss_contrastive(x, y);
  EXPECT_NEAR(r.value, direct_contrastive(x, y), 1e-6);
  expect_fd(x, r.grad_x, [&] { return loss_contrastive(x, y).value; }, "x");
  expect_fd(y, r.grad_y, [&] { return loss_contrastive(x, y).value; }, "y");
}

TEST(Contrastive, ShapeMismatchAndNonFinite) {
  EXPECT_THROW(loss_contrastive(M64(2, 3), M64(3, 3)), DimensionError);
  M64 x(2, 1, {1e300, 1}), y(2, 1, {1e300, 1});
  EXPECT_THROW(loss_contrastive(x, y), NumericError);
}

TEST(Cluster, SingletonsReduceToContrastive) {
  auto g = testing::gen(2);
  auto x = testing::random_matrix<double>(g, 6, 4);
  auto y = testing::random_matrix<double>(g, 6, 4);
  auto p = positives_in_batch(ClusterState::singleton(6), std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  EXPECT_NEAR(loss_cluster(x, y, p).value, loss_contrastive(x, y).value, 1e-12);
}

TEST(Cluster, OneClusterOfTwoZeroEmbeddings) {
  const M64 z(2, 3);
  EXPECT_NEAR(loss_cluster(z, z, PositiveSets{{0, 1}, {0, 1}}).value, 2 * std::log(2.0), 1e-12);
}

TEST(Cluster, RandomClustersMatchDirect) {
  auto g = testing::gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = testing::random_matrix<double>(g, 6, 5);
    auto y = testing::random_matrix<double>(g, 6, 5);
    auto p = random_clusters(g, 6);
    auto r = loss_cluster(x, y, p);
    EXPECT_NEAR(r.value, direct_cluster(x, y, p), 1e-6);
    expect_fd(x, r.grad_x, [&] { return loss_cluster(x, y, p).value; }, "x");
    expect_fd(y, r.grad_y, [&] { return loss_cluster(x, y, p).value; }, "y");
  }
}

TEST(Cluster, PositivesMustContainSelf) {
  const M64 z(2, 2);
  EXPECT_THROW(loss_cluster(z, z, PositiveSets{{1}, {1}}), PreconditionError);
  EXPECT_THROW(loss_cluster(z, z, PositiveSets{{}, {1}}), PreconditionError);
  EXPECT_THROW(loss_cluster(z, z, PositiveSets{{0}}), DimensionError);
}

TEST(Label, ZeroEmbeddingsGiveNLnOnePlusM) {
  const M64 z(3, 2), neg(4, 2);
  EXPECT_NEAR(loss_label(z, z, neg).value, 3 * std::log(5.0), 1e-12);
}

TEST(Label, SaturatedPositive) {
  M64 h(1, 1, {1}), hp(1, 1, {40}), neg(2, 1);
  EXPECT_LT(loss_label(h, hp, neg).value, 1e-10);
}

TEST(Label, RandomMatchesDirectAndFiniteDifferences) {
  auto g = testing::gen(4);
  auto h = testing::random_matrix<double>(g, 4, 3);
  auto hp = testing::random_matrix<double>(g, 4, 3);
  auto neg = testing::random_matrix<double>(g, 3, 3);
  auto r = loss_label(h, hp, neg);
  EXPECT_NEAR(r.value, direct_label(h, hp, neg), 1e-6);
  auto f = [&] { return loss_label(h, hp, neg).value; };
  expect_fd(h, r.grad_h, f, "h");
  expect_fd(hp, r.grad_h_plus, f, "h+");
  expect_fd(neg, r.grad_negatives, f, "neg");
}

TEST(Label, NeedsAtLeastOneNegative) {
  EXPECT_THROW(loss_label(M64(2, 2), M64(2, 2), M64(0, 2)), PreconditionError);
}

TEST(Stage1, AdditiveCombination) {
  EXPECT_DOUBLE_EQ(loss_stage1(1.25, 0.0).total, 1.25);
  const M64 z(2, 3), neg(4, 3);
  const double cluster = loss_cluster(z, z, PositiveSets{{0, 1}, {0, 1}}).value;
  const double label = loss_label(z, z, neg).value;
  EXPECT_NEAR(loss_stage1(cluster, label).total, 2 * std::log(2.0) + 2 * std::log(5.0), 1e-12);
}

TEST(Stage1, GradientOfSumIsSumOfGradients) {
  auto g = testing::gen(5);
  auto x = testing::random_matrix<double>(g, 4, 3);
  auto y = testing::random_matrix<double>(g, 4, 3);
  auto hp = testing::random_matrix<double>(g, 4, 3);
  auto neg = testing::random_matrix<double>(g, 2, 3);
  auto p = random_clusters(g, 4);
  auto c = loss_cluster(x, y, p);
  auto l = loss_label(x, hp, neg);
  M64 gx = c.grad_x;
  for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += l.grad_h.data()[i];
  expect_fd(x, gx, [&] {
    return loss_stage1(loss_cluster(x, y, p).value, loss_label(x, hp, neg).value).total;
  }, "x");
}

TEST(Temperature, EquivalentToScalingLogits) {
  auto g = testing::gen(6);
  auto x = testing::random_matrix<double>(g, 4, 3);
  auto y = testing::random_matrix<double>(g, 4, 3);
  M64 half = x;
  for (auto& v : half.data()) v *= 0.5;
  EXPECT_NEAR(loss_contrastive(x, y, 2.0).value, loss_contrastive(half, y).value, 1e-12);
}

TEST(LossProperty, NonNegativeAndSingletonReduction) {
  auto g = testing::gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = testing::pick(g, 2, 10), d = testing::pick(g, 1, 8), m = testing::pick(g, 1, 5);
    auto x = testing::random_matrix<double>(g, n, d, 2.0);
    auto y = testing::random_matrix<double>(g, n, d, 2.0);
    auto neg = testing::random_matrix<double>(g, m, d, 2.0);
    auto p = random_clusters(g, n);
    EXPECT_GE(loss_contrastive(x, y).value, 0.0);
    EXPECT_GE(loss_cluster(x, y, p).value, 0.0);
    EXPECT_GE(loss_label(x, y, neg).value, 0.0);
    std::vector<std::uint64_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    auto xf = x.cast<float>(), yf = y.cast<float>();
    EXPECT_NEAR(loss_cluster(xf, yf, positives_from_keys(ids)).value, loss_contrastive(xf, yf).value, 1e-6);
  }
}

TEST(LossProperty, RowShiftInvarianceAtLogitLevel) {
  auto g = testing::gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = testing::pick(g, 2, 8);
    auto logits = testing::random_matrix<double>(g, n, n, 3.0);
    auto p = random_clusters(g, n);
    auto shifted = logits;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::uniform_real_distribution<double>(-50, 50)(g);
      for (std::size_t j = 0; j < n; ++j) shifted(i, j) += c;
    }
    EXPECT_NEAR(diagonal_xent(logits).value, diagonal_xent(shifted).value, 1e-6);
    EXPECT_NEAR(multi_positive_xent(logits, p).value, multi_positive_xent(shifted, p).value, 1e-6);
  }
}

TEST(LossProperty, LogitGradientRowsSumToZero) {
  auto g = testing::gen(9);
  auto logits = testing::random_matrix<double>(g, 6, 6);
  auto p = random_clusters(g, 6);
  for (const auto& r : {diagonal_xent(logits), multi_positive_xent(logits, p)}) {
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 6; ++j) s += r.grad_logits(i, j);
      EXPECT_NEAR(s, 0.0, 1e-12);
    }
  }
}

}  // namespace
}  // namespace maclr
