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

#include "maclr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "maclr/errors.hpp"

namespace maclr {

namespace {

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += diff * diff;
  }
  return acc;
}

DenseMatrix seed_plus_plus(const DenseMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  DenseMatrix centroids(k, x.cols());
  std::size_t pick = rng.below(n);
  std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(0).begin());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(x.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        running += nearest[i];
        if (running > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(x.row(i), centroids.row(c)));
    }
  }
  return centroids;
}

// Moves each point to its nearest centroid; a point only leaves its current
// cluster for a strictly closer one. Returns whether anything moved.
bool assign_points(const DenseMatrix& x, const DenseMatrix& centroids,
                   std::vector<std::uint32_t>& assignment, std::vector<double>& distance,
                   std::size_t workers) {
  std::vector<char> moved(x.rows(), 0);
  parallel_for(x.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::uint32_t best = assignment[i];
      double best_d = best == kUnassigned ? std::numeric_limits<double>::infinity()
                                          : squared_distance(x.row(i), centroids.row(best));
      for (std::uint32_t c = 0; c < centroids.rows(); ++c) {
        if (c == assignment[i]) continue;
        const double dc = squared_distance(x.row(i), centroids.row(c));
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      moved[i] = best != assignment[i];
      assignment[i] = best;
      distance[i] = best_d;
    }
  });
  return std::any_of(moved.begin(), moved.end(), [](char m) { return m != 0; });
}

void update_centroids(const DenseMatrix& x, std::size_t k,
                      std::vector<std::uint32_t>& assignment, DenseMatrix& centroids) {
  const std::size_t d = x.cols();
  std::vector<double> sums(k * d, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto c = assignment[i];
    ++counts[c];
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += static_cast<double>(row[j]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      centroids(c, j) = static_cast<float>(sums[c * d + j] / static_cast<double>(counts[c]));
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = x.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (counts[assignment[i]] < 2) continue;
      const double di = squared_distance(x.row(i), centroids.row(assignment[i]));
      if (di > far_d) {
        far_d = di;
        far = i;
      }
    }
    if (far == x.rows()) break;  // no donor cluster left
    --counts[assignment[far]];
    assignment[far] = static_cast<std::uint32_t>(c);
    counts[c] = 1;
    std::copy(x.row(far).begin(), x.row(far).end(), centroids.row(c).begin());
  }
}

}  // namespace

ClusterState ClusterState::singleton(std::size_t n) {
  ClusterState s;
  s.k = n;
  s.assignment.resize(n);
  std::iota(s.assignment.begin(), s.assignment.end(), 0u);
  s.converged = true;
  return s;
}

bool ClusterState::is_singleton() const {
  if (k != assignment.size()) return false;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != i) return false;
  }
  return true;
}

ClusterState kmeans(const DenseMatrix& embeddings, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters, std::size_t workers) {
  const std::size_t n = embeddings.rows();
  if (k < 1) throw PreconditionError("kmeans: K must be at least 1");
  if (k > n) {
    throw PreconditionError("kmeans: K = " + std::to_string(k) + " exceeds the " +
                            std::to_string(n) + " available points");
  }
  if (!embeddings.all_finite()) throw NumericError("kmeans: non-finite embedding values");

  auto rng = Rng::stream(seed, "kmeans");
  ClusterState s;
  s.k = k;
  s.centroids = seed_plus_plus(embeddings, k, rng);
  s.assignment.assign(n, kUnassigned);
  std::vector<double> distance(n, 0.0);

  auto record = [&] {
    s.objective = std::accumulate(distance.begin(), distance.end(), 0.0);
    s.objective_trace.push_back(s.objective);
  };

  bool moved = true;
  for (std::size_t it = 0; it < max_iters; ++it) {
    moved = assign_points(embeddings, s.centroids, s.assignment, distance, workers);
    record();
    s.iterations = it + 1;
    if (!moved) {
      s.converged = true;
      break;
    }
    update_centroids(embeddings, k, s.assignment, s.centroids);
  }
  if (!s.converged) {
    // Centroids moved after the last pass; reassign so the result is
    // nearest-centroid consistent.
    s.converged = !assign_points(embeddings, s.centroids, s.assignment, distance, workers);
    record();
  }
  return s;
}

void normalize_rows(DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    double norm2 = 0.0;
    for (float v : row) norm2 += static_cast<double>(v) * v;
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : row) v = static_cast<float>(v * inv);
  }
}

void ScheduleConfig::validate() const {
  if (initial_k == 0 || double_every == 0 || update_every == 0 || total_steps == 0) {
    throw ParameterError("cluster schedule values must all be positive");
  }
  if (double_every > total_steps || update_every > total_steps) {
    throw ParameterError("T_K and T_update must not exceed T_total");
  }
}

std::string ScheduledK::to_string() const {
  return singleton_ ? std::string("SINGLETON") : std::to_string(k_);
}

bool in_singleton_phase(const ScheduleConfig& config, std::uint64_t step) {
  return 2 * step >= config.total_steps;
}

ScheduledK schedule_k(const ScheduleConfig& config, std::uint64_t step, std::size_t n_instances) {
  if (step < 1 || step > config.total_steps) {
    throw RangeError("schedule_k: step " + std::to_string(step) + " outside [1, " +
                     std::to_string(config.total_steps) + "]");
  }
  if (in_singleton_phase(config, step)) return ScheduledK::singleton();
  const std::uint64_t doublings = (step - 1) / config.double_every;
  std::uint64_t k = std::min<std::uint64_t>(config.initial_k, n_instances);
  for (std::uint64_t i = 0; i < doublings && k < n_instances; ++i) {
    k = std::min<std::uint64_t>(k * 2, n_instances);
  }
  return ScheduledK::clusters(static_cast<std::size_t>(k));
}

PositiveSets positives_from_keys(std::span<const std::uint64_t> keys) {
  std::map<std::uint64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) groups[keys[i]].push_back(i);
  PositiveSets out(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) out[i] = groups[keys[i]];
  return out;
}

PositiveSets positives_in_batch(const ClusterState& state,
                                std::span<const std::size_t> batch_rows) {
  std::vector<std::uint64_t> keys;
  keys.reserve(batch_rows.size());
  for (auto r : batch_rows) {
    if (r >= state.assignment.size()) {
      throw RangeError("batch row " + std::to_string(r) + " has no cluster assignment");
    }
    keys.push_back(state.assignment[r]);
  }
  return positives_from_keys(keys);
}

void write_assignments(std::ostream& out, const ClusterState& state,
                       std::span<const std::uint64_t> row_ids) {
  if (row_ids.size() != state.assignment.size()) {
    throw DimensionError("write_assignments: id count does not match assignment count");
  }
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    out << row_ids[i] << ' ' << state.assignment[i] << '\n';
  }
}

}  // namespace maclr
