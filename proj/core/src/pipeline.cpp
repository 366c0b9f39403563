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

#include "maclr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "maclr/errors.hpp"
#include "maclr/losses.hpp"
#include "maclr/retrieval.hpp"

namespace maclr {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ParameterError("batch_size (N) must be at least 2");
  if (label_batch_size < 1) throw ParameterError("label_batch_size (M) must be at least 1");
  if (k_pseudo < 1) throw ParameterError("k_pseudo must be at least 1");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) {
    throw ParameterError("warmup_ratio must lie in [0, 1)");
  }
  if (!(base_lr > 0.0)) throw ParameterError("base_lr must be positive");
  if (!(finetune_lr > 0.0)) throw ParameterError("finetune_lr must be positive");
  if (instance_max_len < 1 || label_max_len < 1) {
    throw ParameterError("sequence lengths must be at least 1");
  }
  if (kmeans_max_iters < 1) throw ParameterError("kmeans_max_iters must be at least 1");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  if (workers < 1) throw ParameterError("workers must be at least 1");
  schedule.validate();
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {
      {"batch_size", batch_size},
      {"label_batch_size", label_batch_size},
      {"total_steps", schedule.total_steps},
      {"initial_k", schedule.initial_k},
      {"double_every", schedule.double_every},
      {"update_every", schedule.update_every},
      {"base_lr", base_lr},
      {"warmup_ratio", warmup_ratio},
      {"seed", seed},
      {"k_pseudo", k_pseudo},
      {"finetune_lr", finetune_lr},
      {"finetune_steps", finetune_steps},
      {"instance_max_len", instance_max_len},
      {"label_max_len", label_max_len},
      {"kmeans_max_iters", kmeans_max_iters},
      {"stratified_batches", stratified_batches},
      {"temperature", temperature},
  };
}

TrainConfig paper_train_config() { return TrainConfig{}; }

ModelConfig paper_model_config() { return ModelConfig{}; }

TrainConfig desk_train_config() {
  TrainConfig c;
  c.batch_size = 16;
  c.label_batch_size = 16;
  c.schedule = ScheduleConfig{8, 400, 200, 2000};
  // A bag-of-embeddings encoder trained from scratch for 2000 steps needs a
  // far larger step size than a pre-trained transformer.
  c.base_lr = 1e-3;
  c.finetune_lr = 5e-4;
  c.finetune_steps = 200;
  return c;
}

ModelConfig desk_model_config() { return ModelConfig{32, 64, 0.1f}; }

std::vector<TokenIds> tokenize_instances(std::span<const Instance> instances,
                                         const Vocabulary& vocab, std::size_t max_len) {
  std::vector<TokenIds> out;
  out.reserve(instances.size());
  for (const auto& x : instances) out.push_back(vocab.encode(tokenize(x.text), max_len));
  return out;
}

TrainingData TrainingData::prepare(std::span<const Instance> instances,
                                   std::span<const Label> labels, Vocabulary vocab,
                                   std::size_t instance_max_len, std::size_t label_max_len) {
  std::vector<Instance> xs(instances.begin(), instances.end());
  std::vector<Label> ys(labels.begin(), labels.end());
  std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(ys.begin(), ys.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  TrainingData d;
  d.vocab = std::move(vocab);
  d.instance_tokens = tokenize_instances(xs, d.vocab, instance_max_len);
  for (const auto& x : xs) d.instance_ids.push_back(x.id);
  for (const auto& y : ys) {
    d.label_ids.push_back(y.id);
    d.label_tokens.push_back(d.vocab.encode(tokenize(y.text), label_max_len));
  }
  d.ict = make_ict_pairs(xs, d.vocab, instance_max_len, label_max_len);
  if (d.ict.skipped > 0) {
    spdlog::info("ICT construction skipped {} of {} instances", d.ict.skipped, xs.size());
  }
  return d;
}

namespace {

std::size_t find_row(const std::vector<std::uint64_t>& ids, std::uint64_t id, const char* what) {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) {
    throw IntegrityError(std::string("unknown ") + what + " id " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - ids.begin());
}

}  // namespace

std::size_t TrainingData::instance_row(std::uint64_t id) const {
  return find_row(instance_ids, id, "instance");
}

std::size_t TrainingData::label_row(std::uint64_t id) const {
  return find_row(label_ids, id, "label");
}

std::size_t TrainLog::recluster_count() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.reclustered; }));
}

void TrainLog::write_jsonl(std::ostream& out, std::uint64_t interval) const {
  if (interval == 0) interval = 1;
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const bool last = i + 1 == steps.size();
    if (s.step % interval != 0 && !last && !s.reclustered && !s.doubled) continue;
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["loss"] = s.loss;
    j["loss_cluster"] = s.loss_cluster;
    j["loss_label"] = s.loss_label;
    if (!s.k) {
      j["K"] = nullptr;
    } else if (s.k->is_singleton()) {
      j["K"] = "SINGLETON";
    } else {
      j["K"] = s.k->k();
    }
    j["lr"] = s.lr;
    j["elapsed"] = s.elapsed_seconds;
    if (s.doubled) j["doubled"] = true;
    if (s.reclustered) j["reclustered"] = s.clusters;
    out << j.dump() << '\n';
  }
}

namespace {

using Clock = std::chrono::steady_clock;

class EncoderOptimizer {
 public:
  explicit EncoderOptimizer(const EncoderParams& p)
      : embed_(AdamState::for_shape(p.embed_table.rows(), p.embed_table.cols(), "embed_table")),
        weight_(AdamState::for_shape(p.proj_weight.rows(), p.proj_weight.cols(), "proj_weight")),
        bias_(AdamState::for_shape(1, p.proj_bias.size(), "proj_bias")) {}

  void step(EncoderParams& p, const EncoderGrads<float>& g, double lr) {
    adam_step(p.embed_table, g.embed_table, embed_, lr);
    adam_step(p.proj_weight, g.proj_weight, weight_, lr);
    DenseMatrix bias(1, p.proj_bias.size(), p.proj_bias);
    adam_step(bias, DenseMatrix(1, g.proj_bias.size(), g.proj_bias), bias_, lr);
    std::copy(bias.data().begin(), bias.data().end(), p.proj_bias.begin());
  }

 private:
  AdamState embed_;
  AdamState weight_;
  AdamState bias_;
};

template <typename T>
Matrix<T> stack_outputs(const std::vector<ForwardTrace<T>>& traces, std::size_t dim) {
  Matrix<T> m(traces.size(), dim);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::copy(traces[i].output.begin(), traces[i].output.end(), m.row(i).begin());
  }
  return m;
}

template <typename T>
void backprop_rows(const std::vector<ForwardTrace<T>>& traces, const Matrix<T>& grad,
                   const EncoderParamsT<T>& params, EncoderGrads<T>& grads) {
  for (std::size_t i = 0; i < traces.size(); ++i) {
    encode_backward<T>(traces[i], params, grad.row(i), grads);
  }
}

template <typename T>
std::vector<ForwardTrace<T>> forward_rows(const EncoderParamsT<T>& params,
                                          const std::vector<TokenIds>& tokens,
                                          const std::vector<std::vector<T>>& masks) {
  if (masks.size() != tokens.size()) throw DimensionError("one dropout mask per sequence");
  std::vector<ForwardTrace<T>> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.push_back(encode_with_mask<T>(params, tokens[i], masks[i]));
  }
  return out;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::vector<std::size_t>> cluster_members(const ClusterState& s) {
  std::vector<std::vector<std::size_t>> members(s.k);
  for (std::size_t i = 0; i < s.assignment.size(); ++i) members[s.assignment[i]].push_back(i);
  return members;
}

// Half of the batch from one random cluster, the rest uniform; all distinct.
std::vector<std::size_t> stratified_batch(const ClusterState& clusters,
                                          const std::vector<std::vector<std::size_t>>& members,
                                          std::size_t n, std::size_t batch, Rng& rng) {
  const auto& group = members[clusters.assignment[rng.below(n)]];
  const std::size_t take = std::min(batch / 2, group.size());
  std::vector<std::size_t> rows;
  std::vector<bool> used(n, false);
  for (auto i : rng.sample_without_replacement(group.size(), take)) {
    rows.push_back(group[i]);
    used[group[i]] = true;
  }
  while (rows.size() < batch) {
    const auto r = rng.below(n);
    if (used[r]) continue;
    used[r] = true;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

template <typename T>
Stage1Loss<T> stage1_objective(const EncoderParamsT<T>& params, const Stage1Batch<T>& batch,
                               double temperature, EncoderGrads<T>* grads) {
  const std::size_t dim = params.embed_dim();
  const auto h = forward_rows(params, batch.contexts, batch.h_masks);
  const auto h_plus = forward_rows(params, batch.contexts, batch.h_plus_masks);
  const auto titles = forward_rows(params, batch.titles, batch.title_masks);
  const auto negatives = forward_rows(params, batch.negatives, batch.negative_masks);
  const auto x = stack_outputs(h, dim);
  const auto cluster = loss_cluster(x, stack_outputs(titles, dim), batch.positives, temperature);
  const auto label =
      loss_label(x, stack_outputs(h_plus, dim), stack_outputs(negatives, dim), temperature);
  if (grads != nullptr) {
    // h feeds both terms
    auto grad_h = cluster.grad_x;
    for (std::size_t i = 0; i < grad_h.size(); ++i) grad_h.data()[i] += label.grad_h.data()[i];
    backprop_rows(h, grad_h, params, *grads);
    backprop_rows(h_plus, label.grad_h_plus, params, *grads);
    backprop_rows(titles, cluster.grad_y, params, *grads);
    backprop_rows(negatives, label.grad_negatives, params, *grads);
  }
  return loss_stage1(cluster.value, label.value);
}

template Stage1Loss<float> stage1_objective(const EncoderParamsT<float>&,
                                            const Stage1Batch<float>&, double,
                                            EncoderGrads<float>*);
template Stage1Loss<double> stage1_objective(const EncoderParamsT<double>&,
                                             const Stage1Batch<double>&, double,
                                             EncoderGrads<double>*);

TrainResult run_stage1(const TrainingData& data, EncoderParams params, const TrainConfig& config) {
  config.validate();
  params.validate();
  const auto& pairs = data.ict.pairs;
  const std::size_t n = pairs.size();
  const std::size_t batch = config.batch_size;
  const std::size_t m = config.label_batch_size;
  if (n < batch) {
    throw PreconditionError("only " + std::to_string(n) + " ICT pairs for a batch size of " +
                            std::to_string(batch));
  }
  if (data.label_tokens.size() < m) {
    throw PreconditionError("label batch size " + std::to_string(m) + " exceeds the " +
                            std::to_string(data.label_tokens.size()) + " available labels");
  }
  const auto& sched = config.schedule;
  const std::uint64_t total = sched.total_steps;
  const auto lr_schedule = LrSchedule::from_ratio(config.base_lr, config.warmup_ratio, total);

  std::vector<TokenIds> contexts;
  contexts.reserve(n);
  for (const auto& p : pairs) contexts.push_back(p.context);

  auto batch_rng = Rng::stream(config.seed, "stage1/batches");
  auto dropout_rng = Rng::stream(config.seed, "stage1/dropout");
  auto recluster = [&](std::size_t k, std::uint64_t step) {
    auto embeddings = encode_batch(params, contexts, config.workers);
    normalize_rows(embeddings);
    const auto seed = Rng::stream(config.seed, "stage1/kmeans/" + std::to_string(step)).bits();
    return kmeans(embeddings, k, seed, config.kmeans_max_iters, config.workers);
  };

  std::size_t current_k = std::min<std::size_t>(sched.initial_k, n);
  ClusterState clusters = recluster(current_k, 0);
  auto members = config.stratified_batches ? cluster_members(clusters)
                                           : std::vector<std::vector<std::size_t>>{};

  TrainResult result;
  result.log.header = {{"stage", "stage1"},
                       {"optimizer", "fresh"},
                       {"ict_pairs", n},
                       {"ict_skipped", data.ict.skipped},
                       {"labels", data.label_tokens.size()},
                       {"initial_clusters", current_k},
                       {"config", config.to_json()}};
  result.log.steps.reserve(total);

  EncoderOptimizer optimizer(params);
  auto grads = EncoderGrads<float>::zeros_like(params);
  const std::size_t d_e = params.token_dim();
  const double rate = params.dropout_rate;
  if (rate == 0.0) spdlog::warn("dropout rate 0: label regularization positives equal their anchors");
  const auto start = Clock::now();

  for (std::uint64_t t = 1; t <= total; ++t) {
    const bool singleton = in_singleton_phase(sched, t);
    std::vector<std::size_t> rows;
    if (config.stratified_batches && !singleton) {
      rows = stratified_batch(clusters, members, n, batch, batch_rng);
    } else {
      rows = batch_rng.sample_without_replacement(n, batch);
    }
    const auto label_rows = batch_rng.sample_without_replacement(data.label_tokens.size(), m);

    PositiveSets positives;
    if (singleton) {
      positives = positives_from_keys(std::vector<std::uint64_t>(rows.begin(), rows.end()));
    } else {
      positives = positives_in_batch(clusters, rows);
    }

    Stage1Batch<float> step_batch;
    step_batch.positives = std::move(positives);
    for (auto r : rows) {
      step_batch.contexts.push_back(pairs[r].context);
      step_batch.titles.push_back(pairs[r].title);
      step_batch.h_masks.push_back(dropout_mask<float>(dropout_rng, d_e, rate));
      step_batch.h_plus_masks.push_back(dropout_mask<float>(dropout_rng, d_e, rate));
      step_batch.title_masks.push_back(dropout_mask<float>(dropout_rng, d_e, rate));
    }
    for (auto j : label_rows) {
      step_batch.negatives.push_back(data.label_tokens[j]);
      step_batch.negative_masks.push_back(dropout_mask<float>(dropout_rng, d_e, rate));
    }
    grads.zero();
    const auto loss = stage1_objective(params, step_batch, config.temperature, &grads);
    const double lr = lr_at(lr_schedule, t);
    optimizer.step(params, grads, lr);

    StepRecord rec;
    rec.step = t;
    rec.loss = loss.total;
    rec.loss_cluster = loss.cluster;
    rec.loss_label = loss.label;
    rec.k = singleton ? ScheduledK::singleton() : ScheduledK::clusters(current_k);
    rec.clusters = singleton ? n : clusters.k;
    rec.lr = lr;

    if (2 * t < total) {
      if (t % sched.double_every == 0) {
        current_k = std::min(current_k * 2, n);
        rec.doubled = true;
      }
      if (t % sched.update_every == 0) {
        clusters = recluster(current_k, t);
        if (config.stratified_batches) members = cluster_members(clusters);
        rec.reclustered = true;
        rec.clusters = clusters.k;
      }
    }
    rec.elapsed_seconds = seconds_since(start);
    result.log.steps.push_back(rec);
  }
  result.params = std::move(params);
  return result;
}

IdfTable fit_instance_idf(const TrainingData& data) {
  std::vector<TokenIds> docs;
  docs.reserve(data.instance_tokens.size());
  for (const auto& t : data.instance_tokens) docs.push_back(without_unk(t));
  return fit_idf(docs);
}

PseudoPairSet build_pseudo_pairs(const TrainingData& data, const EncoderParams& params,
                                 const IdfTable& idf, std::size_t k_pseudo, std::size_t workers) {
  if (k_pseudo < 1) throw ParameterError("k_pseudo must be at least 1");
  if (data.label_tokens.empty()) throw PreconditionError("no labels to pseudo-label with");
  const auto index = build_label_index(params, data.label_tokens, data.label_ids, workers);
  const auto queries = encode_batch(params, data.instance_tokens, workers);
  const auto encoder_top = topk_batch(index, queries, data.instance_ids, k_pseudo, workers);

  std::vector<SparseVector> label_vectors;
  label_vectors.reserve(data.label_tokens.size());
  for (const auto& t : data.label_tokens) label_vectors.push_back(vectorize(without_unk(t), idf));
  std::vector<SparseVector> instance_vectors;
  instance_vectors.reserve(data.instance_tokens.size());
  for (const auto& t : data.instance_tokens) {
    instance_vectors.push_back(vectorize(without_unk(t), idf));
  }
  const auto tfidf_top = sparse_predict(instance_vectors, data.instance_ids, label_vectors,
                                        data.label_ids, k_pseudo, workers);

  PseudoPairSet out;
  for (std::size_t i = 0; i < data.instance_tokens.size(); ++i) {
    std::map<std::uint64_t, std::uint8_t> merged;
    for (const auto& e : encoder_top[i].entries) merged[e.id] |= kFromEncoder;
    for (const auto& e : tfidf_top[i].entries) merged[e.id] |= kFromTfidf;
    for (const auto& [label, sources] : merged) {
      out.pairs.push_back({data.instance_ids[i], label, sources});
    }
  }
  return out;
}

TrainResult run_stage2(const TrainingData& data, EncoderParams params,
                       const PseudoPairSet& pseudo, const TrainConfig& config) {
  config.validate();
  params.validate();
  if (pseudo.pairs.empty()) throw PreconditionError("stage 2 needs at least one pseudo pair");
  std::vector<std::size_t> instance_rows;
  std::vector<std::size_t> label_rows;
  for (const auto& p : pseudo.pairs) {
    instance_rows.push_back(data.instance_row(p.instance_id));
    label_rows.push_back(data.label_row(p.label_id));
  }
  const std::size_t total_pairs = pseudo.pairs.size();
  const std::size_t batch = config.batch_size;
  const bool with_replacement = total_pairs < batch;
  if (with_replacement) {
    spdlog::warn("only {} pseudo pairs for a batch of {}; sampling with replacement",
                 total_pairs, batch);
  }
  const std::uint64_t total = config.total_steps();
  const auto lr_schedule = LrSchedule::from_ratio(config.base_lr, config.warmup_ratio, total);
  auto batch_rng = Rng::stream(config.seed, "stage2/batches");
  auto dropout_rng = Rng::stream(config.seed, "stage2/dropout");

  TrainResult result;
  result.log.header = {{"stage", "stage2"},
                       {"optimizer", "fresh"},
                       {"pseudo_pairs", total_pairs},
                       {"sampling", with_replacement ? "with-replacement" : "without-replacement"},
                       {"config", config.to_json()}};
  result.log.steps.reserve(total);

  EncoderOptimizer optimizer(params);
  auto grads = EncoderGrads<float>::zeros_like(params);
  const std::size_t dim = params.embed_dim();
  const auto start = Clock::now();

  for (std::uint64_t t = 1; t <= total; ++t) {
    std::vector<std::size_t> picks;
    if (with_replacement) {
      for (std::size_t i = 0; i < batch; ++i) picks.push_back(batch_rng.below(total_pairs));
    } else {
      picks = batch_rng.sample_without_replacement(total_pairs, batch);
    }
    std::vector<ForwardTrace<float>> xs, ys;
    std::vector<std::uint64_t> keys;
    for (auto p : picks) {
      xs.push_back(encode_train(params, data.instance_tokens[instance_rows[p]], dropout_rng));
      ys.push_back(encode_train(params, data.label_tokens[label_rows[p]], dropout_rng));
      keys.push_back(pseudo.pairs[p].instance_id);
    }
    const auto loss = loss_cluster(stack_outputs(xs, dim), stack_outputs(ys, dim),
                                   positives_from_keys(keys), config.temperature);
    grads.zero();
    backprop_rows(xs, loss.grad_x, params, grads);
    backprop_rows(ys, loss.grad_y, params, grads);
    const double lr = lr_at(lr_schedule, t);
    optimizer.step(params, grads, lr);

    StepRecord rec;
    rec.step = t;
    rec.loss = loss.value;
    rec.loss_cluster = loss.value;
    rec.lr = lr;
    rec.elapsed_seconds = seconds_since(start);
    result.log.steps.push_back(rec);
  }
  result.params = std::move(params);
  return result;
}

TrainResult finetune(const TrainingData& data, EncoderParams params, const FewShotSubset& fewshot,
                     const TrainConfig& config) {
  config.validate();
  params.validate();
  if (fewshot.pairs.empty()) throw PreconditionError("few-shot subset is empty");
  std::vector<std::size_t> instance_rows;
  std::vector<std::size_t> label_rows;
  for (const auto& p : fewshot.pairs) {
    instance_rows.push_back(data.instance_row(p.instance_id));
    label_rows.push_back(data.label_row(p.label_id));
  }
  const std::size_t batch = std::min(config.batch_size, fewshot.pairs.size());
  if (batch < 2) spdlog::warn("fine-tuning with a single pair: the contrastive loss is zero");
  const std::uint64_t steps = config.finetune_steps;

  TrainResult result;
  result.log.header = {{"stage", "finetune"},
                       {"optimizer", "fresh"},
                       {"fewshot_mode", to_string(fewshot.mode)},
                       {"fewshot_ratio", fewshot.ratio},
                       {"fewshot_seed", fewshot.seed},
                       {"fewshot_pairs", fewshot.pairs.size()},
                       {"lr", config.finetune_lr},
                       {"steps", steps},
                       {"batch_size", batch}};
  if (steps == 0) {
    result.params = std::move(params);
    return result;
  }
  const auto lr_schedule =
      LrSchedule::from_ratio(config.finetune_lr, config.warmup_ratio, steps);
  auto batch_rng = Rng::stream(config.seed, "finetune/batches");
  auto dropout_rng = Rng::stream(config.seed, "finetune/dropout");
  EncoderOptimizer optimizer(params);
  auto grads = EncoderGrads<float>::zeros_like(params);
  const std::size_t dim = params.embed_dim();
  const auto start = Clock::now();
  result.log.steps.reserve(steps);

  for (std::uint64_t t = 1; t <= steps; ++t) {
    std::vector<ForwardTrace<float>> xs, ys;
    for (auto p : batch_rng.sample_without_replacement(fewshot.pairs.size(), batch)) {
      xs.push_back(encode_train(params, data.instance_tokens[instance_rows[p]], dropout_rng));
      ys.push_back(encode_train(params, data.label_tokens[label_rows[p]], dropout_rng));
    }
    const auto loss =
        loss_contrastive(stack_outputs(xs, dim), stack_outputs(ys, dim), config.temperature);
    grads.zero();
    backprop_rows(xs, loss.grad_x, params, grads);
    backprop_rows(ys, loss.grad_y, params, grads);
    const double lr = lr_at(lr_schedule, t);
    optimizer.step(params, grads, lr);

    StepRecord rec;
    rec.step = t;
    rec.loss = loss.value;
    rec.lr = lr;
    rec.elapsed_seconds = seconds_since(start);
    result.log.steps.push_back(rec);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace maclr
