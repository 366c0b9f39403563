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

#ifndef MACLR_CLUSTERING_HPP_
#define MACLR_CLUSTERING_HPP_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "maclr/numkit.hpp"

namespace maclr {

struct ClusterState {
  std::size_t k = 0;
  std::vector<std::uint32_t> assignment;  // per row, < k
  DenseMatrix centroids;                  // k x d; empty in singleton mode
  double objective = 0.0;                 // sum of squared distances
  std::vector<double> objective_trace;    // after each assignment pass
  std::size_t iterations = 0;
  bool converged = false;

  // Every row its own cluster.
  static ClusterState singleton(std::size_t n);
  bool is_singleton() const;
};

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing or max_iters is reached. Empty clusters take the point farthest
// from its centroid. The returned assignment is nearest-centroid with respect
// to the returned centroids.
ClusterState kmeans(const DenseMatrix& embeddings, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 50, std::size_t workers = 1);

// Scales each non-zero row to unit L2 norm.
void normalize_rows(DenseMatrix& m);

struct ScheduleConfig {
  std::uint64_t initial_k = 2048;       // K_0
  std::uint64_t double_every = 10000;   // T_K
  std::uint64_t update_every = 5000;    // T_update
  std::uint64_t total_steps = 100000;   // T_total

  void validate() const;
};

// Cluster granularity at a training step: a finite K or one cluster per
// instance.
class ScheduledK {
 public:
  static ScheduledK singleton() { return ScheduledK(true, 0); }
  static ScheduledK clusters(std::size_t k) { return ScheduledK(false, k); }

  bool is_singleton() const noexcept { return singleton_; }
  std::size_t k() const noexcept { return k_; }
  std::string to_string() const;

  friend bool operator==(const ScheduledK&, const ScheduledK&) = default;

 private:
  ScheduledK(bool singleton, std::size_t k) : singleton_(singleton), k_(k) {}
  bool singleton_;
  std::size_t k_;
};

// step in [1, T_total]: K_0 * 2^floor((step-1)/T_K) clamped to n_instances
// before the midpoint, singleton from step >= T_total / 2.
ScheduledK schedule_k(const ScheduleConfig& config, std::uint64_t step, std::size_t n_instances);

// True when the step is at or past the singleton switch.
bool in_singleton_phase(const ScheduleConfig& config, std::uint64_t step);

using PositiveSets = std::vector<std::vector<std::size_t>>;

// P(i) = { p : key[p] == key[i] }, in ascending batch position.
PositiveSets positives_from_keys(std::span<const std::uint64_t> keys);

// Batch positives from cluster co-membership of the given rows.
PositiveSets positives_in_batch(const ClusterState& state,
                                std::span<const std::size_t> batch_rows);

// "row cluster" lines.
void write_assignments(std::ostream& out, const ClusterState& state,
                       std::span<const std::uint64_t> row_ids);

}  // namespace maclr

#endif  // MACLR_CLUSTERING_HPP_
