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


// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <spdlog/spdlog.h>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "maclr/clustering.hpp"
#include "maclr/losses.hpp"
#include "maclr/pipeline.hpp"
#include "maclr/retrieval.hpp"
#include "maclr/synthetic.hpp"
#include "maclr/tfidf.hpp"
#include "maclr_cli/commands.hpp"

namespace {

using namespace maclr;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Gen = std::mt19937_64;

template <typename T>
Matrix<T> random_matrix(Gen& g, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix<T> m(rows, cols);
  for (auto& v : m.data()) v = static_cast<T>(u(g));
  return m;
}

std::size_t pick(Gen& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

PositiveSets random_positives(Gen& g, std::size_t n) {
  std::vector<std::uint64_t> keys(n);
  for (auto& k : keys) k = pick(g, 0, n / 2);
  return positives_from_keys(keys);
}

// ---------------------------------------------------------------- gradients

constexpr double kFdStep = 1e-3;
constexpr double kFdRel = 1e-3;

struct FdTally {
  std::size_t checked = 0;
  double worst = 0.0;
  std::string first_failure;

  void add(double analytic, double numeric, double abs_floor, const std::string& where) {
    ++checked;
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (diff > abs_floor) worst = std::max(worst, diff / scale);
    if (diff > kFdRel * scale && diff > abs_floor && first_failure.empty())
      first_failure = fmt::format("{}: analytic {} numeric {}", where, analytic, numeric);
  }
};

void fd_check(std::span<double> param, std::span<const double> grad, const std::function<double()>& f,
              double abs_floor, const std::string& where, FdTally& tally) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double keep = param[i];
    param[i] = keep + kFdStep;
    const double plus = f();
    param[i] = keep - kFdStep;
    const double minus = f();
    param[i] = keep;
    tally.add(grad[i], (plus - minus) / (2 * kFdStep), abs_floor, where);
  }
}

Outcome gradient_oracle() {
  Gen g(101);
  FdTally tally;
  std::size_t configs = 0;
  for (int rep = 0; rep < 2; ++rep) {
    for (std::size_t n : {2, 4, 8}) {
      for (std::size_t m : {1, 3}) {
        for (std::size_t d : {4, 16}) {
          ++configs;
          const std::string tag = fmt::format("N={} M={} d={}", n, m, d);
          auto x = random_matrix<double>(g, n, d), y = random_matrix<double>(g, n, d);
          {
            auto l = loss_contrastive(x, y);
            fd_check(x.data(), l.grad_x.data(), [&] { return loss_contrastive(x, y).value; }, 1e-7,
                     "contrastive " + tag, tally);
            fd_check(y.data(), l.grad_y.data(), [&] { return loss_contrastive(x, y).value; }, 1e-7,
                     "contrastive " + tag, tally);
          }
          {
            const auto pos = random_positives(g, n);
            auto l = loss_cluster(x, y, pos);
            auto f = [&] { return loss_cluster(x, y, pos).value; };
            fd_check(x.data(), l.grad_x.data(), f, 1e-7, "cluster " + tag, tally);
            fd_check(y.data(), l.grad_y.data(), f, 1e-7, "cluster " + tag, tally);
          }
          {
            auto h = random_matrix<double>(g, n, d), hp = random_matrix<double>(g, n, d);
            auto neg = random_matrix<double>(g, m, d);
            auto l = loss_label(h, hp, neg);
            auto f = [&] { return loss_label(h, hp, neg).value; };
            fd_check(h.data(), l.grad_h.data(), f, 1e-7, "label " + tag, tally);
            fd_check(hp.data(), l.grad_h_plus.data(), f, 1e-7, "label " + tag, tally);
            fd_check(neg.data(), l.grad_negatives.data(), f, 1e-7, "label " + tag, tally);
          }
          {
            const std::size_t v = 12, de = 5;
            EncoderParamsT<double> p;
            p.embed_table = random_matrix<double>(g, v, de);
            p.proj_weight = random_matrix<double>(g, de, d, 0.5);
            auto bias = random_matrix<double>(g, 1, d);
            p.proj_bias.assign(bias.data().begin(), bias.data().end());
            p.dropout_rate = 0.2f;
            Stage1Batch<double> b;
            auto rng = Rng::stream(configs, "acceptance/dropout");
            auto seq = [&] {
              TokenIds t(pick(g, 1, 4));
              for (auto& tok : t) tok = static_cast<TokenId>(pick(g, 0, v - 1));
              return t;
            };
            for (std::size_t i = 0; i < n; ++i) {
              b.contexts.push_back(seq());
              b.titles.push_back(seq());
              b.h_masks.push_back(dropout_mask<double>(rng, de, 0.2));
              b.h_plus_masks.push_back(dropout_mask<double>(rng, de, 0.2));
              b.title_masks.push_back(dropout_mask<double>(rng, de, 0.2));
            }
            b.positives = random_positives(g, n);
            for (std::size_t j = 0; j < m; ++j) {
              b.negatives.push_back(seq());
              b.negative_masks.push_back(dropout_mask<double>(rng, de, 0.2));
            }
            auto grads = EncoderGrads<double>::zeros_like(p);
            stage1_objective(p, b, 1.0, &grads);
            auto f = [&] { return stage1_objective(p, b).total; };
            fd_check(p.embed_table.data(), grads.embed_table.data(), f, 1e-6, "stage1 " + tag, tally);
            fd_check(p.proj_weight.data(), grads.proj_weight.data(), f, 1e-6, "stage1 " + tag, tally);
            fd_check(p.proj_bias, grads.proj_bias, f, 1e-6, "stage1 " + tag, tally);
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = tally.first_failure.empty() && configs >= 20;
  o.detail = fmt::format("{} configs, {} partials, worst rel err {:.2e}", configs, tally.checked, tally.worst);
  if (!o.pass) o.detail += "; " + tally.first_failure;
  return o;
}

// ---------------------------------------------------------------- losses

Outcome reduction_identity() {
  Gen g(202);
  double worst = 0.0;
  for (int b = 0; b < 100; ++b) {
    const std::size_t n = pick(g, 1, 32), d = pick(g, 1, 24);
    auto x = random_matrix<double>(g, n, d), y = random_matrix<double>(g, n, d);
    PositiveSets singleton(n);
    for (std::size_t i = 0; i < n; ++i) singleton[i] = {i};
    worst = std::max(worst, std::abs(loss_cluster(x, y, singleton).value - loss_contrastive(x, y).value));
  }
  return {worst <= 1e-6, fmt::format("100 batches, max |diff| {:.2e}", worst)};
}

Outcome closed_forms() {
  double worst = 0.0;
  for (std::size_t n : {1, 2, 5, 16, 32}) {
    for (std::size_t m : {1, 3, 16}) {
      const Matrix<double> zx(n, 8), zy(n, 8), zneg(m, 8);
      PositiveSets all(n);
      for (auto& p : all)
        for (std::size_t j = 0; j < n; ++j) p.push_back(j);
      const double nn = static_cast<double>(n);
      worst = std::max(worst, std::abs(loss_contrastive(zx, zy).value - nn * std::log(nn)));
      worst = std::max(worst, std::abs(loss_label(zx, zy, zneg).value - nn * std::log(1.0 + m)));
      worst = std::max(worst, std::abs(loss_cluster(zx, zy, all).value - nn * std::log(nn)));
    }
  }
  return {worst <= 1e-6, fmt::format("N in {{1,2,5,16,32}}, M in {{1,3,16}}, max |diff| {:.2e}", worst)};
}

// ---------------------------------------------------------------- k-means

double sqdist(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return s;
}

Outcome kmeans_checks() {
  Gen g(303);
  std::size_t monotone_fail = 0, oracle_fail = 0, blob_fail = 0;
  for (int ds = 0; ds < 50; ++ds) {
    const std::size_t n = pick(g, 10, 300), d = pick(g, 2, 16), k = pick(g, 1, std::min<std::size_t>(n, 20));
    const auto pts = random_matrix<float>(g, n, d);
    const auto st = kmeans(pts, k, ds);
    for (std::size_t i = 1; i < st.objective_trace.size(); ++i)
      if (st.objective_trace[i] > st.objective_trace[i - 1] * (1 + 1e-9)) {
        ++monotone_fail;
        break;
      }
    for (std::size_t i = 0; i < n; ++i) {
      const double own = sqdist(pts.row(i), st.centroids.row(st.assignment[i]));
      double best = own;
      for (std::size_t c = 0; c < k; ++c) best = std::min(best, sqdist(pts.row(i), st.centroids.row(c)));
      if (own > best * (1 + 1e-6) + 1e-9) {
        ++oracle_fail;
        break;
      }
    }
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Gen b(seed);
    std::normal_distribution<float> noise(0.f, 0.3f);
    const std::size_t per = 50, d = 4;
    DenseMatrix pts(2 * per, d);
    for (std::size_t i = 0; i < 2 * per; ++i)
      for (std::size_t j = 0; j < d; ++j) pts(i, j) = (i < per ? -5.f : 5.f) + noise(b);
    const auto st = kmeans(pts, 2, seed);
    bool ok = true;
    for (std::size_t i = 0; i < 2 * per; ++i)
      ok = ok && (st.assignment[i] == st.assignment[0]) == (i < per);
    blob_fail += !ok;
  }
  return {monotone_fail + oracle_fail + blob_fail == 0,
          fmt::format("50 datasets: {} non-monotone, {} off nearest centroid; 20 blob seeds: {} wrong",
                      monotone_fail, oracle_fail, blob_fail)};
}

// ---------------------------------------------------------------- schedule

Outcome schedule_conformance(const std::vector<TrainLog>& desk_logs, std::size_t n_instances) {
  const ScheduleConfig paper{2048, 10000, 5000, 100000};
  std::vector<std::string> changes;
  ScheduledK prev = schedule_k(paper, 1, 1u << 20);
  std::string start = prev.to_string();
  for (std::uint64_t t = 2; t <= paper.total_steps; ++t) {
    const auto k = schedule_k(paper, t, 1u << 20);
    if (!(k == prev)) changes.push_back(fmt::format("{}@{}", k.to_string(), k.is_singleton() ? t : t - 1));
    prev = k;
  }
  const std::vector<std::string> want = {"4096@10000", "8192@20000", "16384@30000", "32768@40000",
                                         "SINGLETON@50000"};
  bool ok = start == "2048" && changes == want;
  std::size_t mismatched = 0, records = 0;
  const auto desk = desk_train_config().schedule;
  for (const auto& log : desk_logs)
    for (const auto& s : log.steps) {
      ++records;
      if (!s.k || !(*s.k == schedule_k(desk, s.step, n_instances))) ++mismatched;
    }
  ok = ok && mismatched == 0 && records == desk_logs.size() * desk.total_steps;
  std::string trace = start;
  for (const auto& c : changes) trace += " -> " + c;
  return {ok, fmt::format("full-scale trace {}; desk logs: {} of {} steps off schedule", trace, mismatched, records)};
}

// ---------------------------------------------------------------- metrics

Outcome metric_oracle() {
  Gen g(606);
  std::size_t mismatches = 0;
  const std::vector<std::size_t> ks = {1, 3, 5, 10};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t l = pick(g, 1, 40);
    std::vector<float> scores(l);
    for (auto& s : scores) s = static_cast<float>(pick(g, 0, 20)) / 20.0f;  // frequent ties
    std::vector<std::uint64_t> truth;
    for (std::size_t j = 0; j < l; ++j)
      if (pick(g, 0, 3) == 0) truth.push_back(j);
    if (truth.empty()) truth.push_back(pick(g, 0, l - 1));

    std::vector<std::size_t> order(l);
    for (std::size_t j = 0; j < l; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });

    LabelIndex index;
    index.embeddings = DenseMatrix(l, 1);
    for (std::size_t j = 0; j < l; ++j) {
      index.embeddings(j, 0) = scores[j];
      index.ids.push_back(j);
    }
    const float one = 1.0f;
    auto pred = topk(index, std::span<const float>(&one, 1), 10);
    pred.instance_id = 0;
    const std::vector<RankedPrediction> preds{pred};
    TruthMap tm{{0, truth}};
    const auto report = compute_metrics(preds, tm, ks);
    for (std::size_t k : ks) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < std::min(k, l); ++r)
        hits += std::count(truth.begin(), truth.end(), order[r]);
      const double r_want = double(hits) / double(truth.size());
      if (report.recall.at(k) != r_want) ++mismatches;
      if (k <= 5 && report.precision.at(k) != double(hits) / double(k)) ++mismatches;
    }
  }
  LabelIndex hand;
  hand.embeddings = DenseMatrix(4, 1, std::vector<float>{0.9f, 0.1f, 0.8f, 0.2f});
  hand.ids = {0, 1, 2, 3};
  const float one = 1.0f;
  const auto hp = topk(hand, std::span<const float>(&one, 1), 2);
  const std::vector<std::uint64_t> ht{0, 3};
  const double p2 = precision_at_k(hp, ht, 2), r2 = recall_at_k(hp, ht, 2);
  const bool ok = mismatches == 0 && p2 == 0.5 && r2 == 0.5;
  return {ok, fmt::format("1000 random instances, {} mismatches; hand example P@2={} R@2={}", mismatches, p2, r2)};
}

// ---------------------------------------------------------------- TF-IDF

Outcome tfidf_exactness() {
  const fs::path dir = fs::path(MACLR_TEST_DATA_DIR) / "hand5";
  const auto corpus = load_corpus(dir / "instances.jsonl", dir / "labels.jsonl", dir / "pairs.tsv");
  const auto vocab = build_vocab(corpus.instances, corpus.labels, 2);
  std::vector<TokenIds> docs;
  std::vector<std::uint64_t> doc_ids, label_ids;
  for (const auto& x : corpus.instances) {
    docs.push_back(without_unk(vocab.encode(tokenize(x.text))));
    doc_ids.push_back(x.id);
  }
  const auto idf = fit_idf(docs);
  std::vector<SparseVector> dv, lv;
  for (const auto& d : docs) dv.push_back(vectorize(d, idf));
  for (const auto& y : corpus.labels) {
    lv.push_back(vectorize(without_unk(vocab.encode(tokenize(y.text))), idf));
    label_ids.push_back(y.id);
  }
  const double a = 1 + std::log(6.0 / 4.0), b = 1 + std::log(6.0 / 3.0), r2 = std::sqrt(2.0);
  double worst = 0.0;
  auto cmp = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  cmp(idf.idf(vocab.id("apple")), a);
  for (auto t : {"banana", "cherry", "date", "elder"}) cmp(idf.idf(vocab.id(t)), b);

  auto weight = [&](const SparseVector& v, const char* token) {
    for (std::size_t i = 0; i < v.nnz(); ++i)
      if (v.indices[i] == vocab.id(token)) return double(v.values[i]);
    return 0.0;
  };
  const double n0 = std::sqrt(a * a + b * b), n1 = std::sqrt(a * a + 4 * b * b), n4 = std::sqrt(4 * a * a + b * b);
  cmp(weight(dv[0], "apple"), a / n0);
  cmp(weight(dv[0], "banana"), b / n0);
  cmp(weight(dv[1], "apple"), a / n1);
  cmp(weight(dv[1], "cherry"), 2 * b / n1);
  cmp(weight(dv[2], "banana"), 1 / r2);
  cmp(weight(dv[2], "date"), 1 / r2);
  for (auto t : {"cherry", "date", "elder"}) cmp(weight(dv[3], t), 1 / std::sqrt(3.0));
  cmp(weight(dv[4], "apple"), 2 * a / n4);
  cmp(weight(dv[4], "elder"), b / n4);
  cmp(weight(lv[0], "apple"), 1.0);
  cmp(weight(lv[1], "cherry"), 1 / r2);
  cmp(weight(lv[2], "elder"), 1 / r2);

  const std::vector<std::vector<std::uint64_t>> order{
      {10, 12, 11}, {11, 10, 12}, {11, 12, 10}, {11, 12, 10}, {10, 12, 11}};
  const std::vector<std::vector<double>> score{{a / n0, b / (r2 * n0), 0},
                                               {2 * b / (r2 * n1), a / n1, 0},
                                               {0.5, 0.5, 0},
                                               {2 / std::sqrt(6.0), 1 / std::sqrt(6.0), 0},
                                               {2 * a / n4, b / (r2 * n4), 0}};
  const auto preds = sparse_predict(dv, doc_ids, lv, label_ids, 100);
  bool ranks_ok = preds.size() == 5;
  for (std::size_t d = 0; ranks_ok && d < 5; ++d)
    for (std::size_t r = 0; r < 3; ++r) {
      ranks_ok = ranks_ok && preds[d].entries[r].id == order[d][r];
      cmp(preds[d].entries[r].score, score[d][r]);
    }
  const auto m = compute_metrics(preds, truth_from_pairs(corpus.pairs), kDefaultKs);
  cmp(m.precision.at(1), 4.0 / 5);
  cmp(m.precision.at(3), 7.0 / 15);
  cmp(m.precision.at(5), 7.0 / 25);
  cmp(m.recall.at(1), 3.0 / 5);
  for (std::size_t k : {3, 5, 10, 100}) cmp(m.recall.at(k), 1.0);
  return {ranks_ok && worst <= 1e-6,
          fmt::format("idf, vectors, rankings, metrics: max |diff| {:.2e}, rankings {}", worst,
                      ranks_ok ? "match" : "differ")};
}

// ---------------------------------------------------------------- pseudo pairs

std::set<std::uint64_t> brute_top3(const std::vector<double>& scores, std::span<const std::uint64_t> ids) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : ids[a] < ids[b];
  });
  return {ids[order[0]], ids[order[1]], ids[order[2]]};
}

Outcome pseudo_pairs() {
  SyntheticConfig sc;
  sc.topics = 100;
  sc.train_instances = 50;
  sc.test_instances = 1;
  sc.topic_words = 6;
  sc.noise_words = 60;
  sc.seed = 8;
  const auto syn = make_synthetic_corpus(sc);
  const auto cfg = desk_train_config();
  const auto mc = desk_model_config();
  auto data = TrainingData::prepare(syn.train.instances, syn.train.labels,
                                    build_vocab(syn.train.instances, syn.train.labels, 1),
                                    cfg.instance_max_len, cfg.label_max_len);
  auto rng = Rng::stream(8, "init");
  const auto params = init_encoder(data.vocab.size(), mc.token_dim, mc.embed_dim, mc.dropout, rng);
  const auto idf = fit_instance_idf(data);
  const auto set = build_pseudo_pairs(data, params, idf, 3);

  std::vector<std::vector<float>> label_emb;
  std::vector<SparseVector> label_vec;
  for (const auto& t : data.label_tokens) {
    label_emb.push_back(encode(params, t));
    label_vec.push_back(vectorize(without_unk(t), idf));
  }
  std::map<std::uint64_t, std::pair<std::set<std::uint64_t>, std::set<std::uint64_t>>> got;
  std::map<std::uint64_t, std::size_t> count;
  for (const auto& p : set.pairs) {
    ++count[p.instance_id];
    if (p.sources & kFromEncoder) got[p.instance_id].first.insert(p.label_id);
    if (p.sources & kFromTfidf) got[p.instance_id].second.insert(p.label_id);
  }
  std::size_t enc_bad = 0, tf_bad = 0, count_bad = 0;
  for (std::size_t i = 0; i < data.instance_ids.size(); ++i) {
    const auto q = encode(params, data.instance_tokens[i]);
    const auto qv = vectorize(without_unk(data.instance_tokens[i]), idf);
    std::vector<double> es, ts;
    for (std::size_t j = 0; j < label_emb.size(); ++j) {
      float s = 0.0f;
      for (std::size_t c = 0; c < q.size(); ++c) s += q[c] * label_emb[j][c];
      es.push_back(s);
      double t = 0.0;
      for (std::size_t x = 0; x < qv.nnz(); ++x)
        for (std::size_t y = 0; y < label_vec[j].nnz(); ++y)
          if (qv.indices[x] == label_vec[j].indices[y]) t += double(qv.values[x]) * label_vec[j].values[y];
      ts.push_back(static_cast<float>(t));
    }
    const auto id = data.instance_ids[i];
    enc_bad += got[id].first != brute_top3(es, data.label_ids);
    tf_bad += got[id].second != brute_top3(ts, data.label_ids);
    count_bad += count[id] < 3 || count[id] > 6;
  }
  return {enc_bad + tf_bad + count_bad == 0 && data.label_ids.size() == 100 && data.instance_ids.size() == 50,
          fmt::format("50 instances x 100 labels: {} encoder, {} TF-IDF top-3 mismatches, {} counts outside [3,6]",
                      enc_bad, tf_bad, count_bad)};
}

// ---------------------------------------------------------------- synthetic end to end

struct SeedRun {
  std::uint64_t seed = 0;
  double stage1 = 0, stage2 = 0, finetuned = 0;
  TrainLog stage1_log;
  std::size_t ict_pairs = 0;
};

SeedRun synthetic_run(std::uint64_t seed) {
  SyntheticConfig sc;
  sc.seed = seed;
  const auto syn = make_synthetic_corpus(sc);
  const auto cfg = [&] {
    auto c = desk_train_config();
    c.seed = seed;
    return c;
  }();
  const auto mc = desk_model_config();
  // zero-shot: only instance and label texts reach training
  const auto data = TrainingData::prepare(syn.train.instances, syn.train.labels,
                                          build_vocab(syn.train.instances, syn.train.labels),
                                          cfg.instance_max_len, cfg.label_max_len);
  const auto test_tokens = tokenize_instances(syn.test_instances, data.vocab, cfg.instance_max_len);
  std::vector<std::uint64_t> test_ids;
  for (const auto& i : syn.test_instances) test_ids.push_back(i.id);
  const std::vector<std::size_t> ks{1, 3, 5};
  auto r5 = [&](const EncoderParams& p) {
    const auto index = build_label_index(p, data.label_tokens, data.label_ids);
    return evaluate(index, p, test_tokens, test_ids, syn.test_pairs, ks).recall.at(5);
  };
  auto rng = Rng::stream(seed, "init");
  auto p0 = init_encoder(data.vocab.size(), mc.token_dim, mc.embed_dim, mc.dropout, rng);
  SeedRun out;
  out.seed = seed;
  out.ict_pairs = data.ict.pairs.size();
  auto s1 = run_stage1(data, p0, cfg);
  out.stage1 = r5(s1.params);
  out.stage1_log = std::move(s1.log);
  const auto pseudo = build_pseudo_pairs(data, s1.params, fit_instance_idf(data), cfg.k_pseudo);
  const auto s2 = run_stage2(data, s1.params, pseudo, cfg);
  out.stage2 = r5(s2.params);
  const auto subset = sample_fewshot(syn.train.pairs, FewShotMode::kPairRatio, 0.05, seed);
  out.finetuned = r5(finetune(data, s2.params, subset, cfg).params);
  return out;
}

Outcome synthetic_zero_shot(const std::vector<SeedRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    ok = ok && r.stage1 >= 0.60 && r.stage2 >= r.stage1 - 0.02;
    detail += fmt::format("seed {}: stage I R@5 {:.3f}, stage II {:.3f}; ", r.seed, r.stage1, r.stage2);
  }
  detail += "gate stage I >= 0.60, stage II >= stage I - 0.02";
  return {ok, detail};
}

Outcome fewshot(const std::vector<SeedRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    ok = ok && r.finetuned >= r.stage2 - 0.02;
    detail += fmt::format("seed {}: zero-shot {:.3f} -> 5% fine-tuned {:.3f}; ", r.seed, r.stage2, r.finetuned);
  }
  // label coverage: ratio p/q of the distinct labels, rounded up
  const std::vector<std::pair<std::size_t, std::size_t>> ratios{{1, 20}, {1, 10}, {1, 4}, {1, 3}, {1, 2}, {1, 1}};
  std::size_t coverage_bad = 0, coverage_checks = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Gen g(900 + seed);
    std::vector<PositivePair> pairs;
    std::set<std::uint64_t> used;
    for (std::uint64_t i = 0; i < 400; ++i)
      for (std::size_t r = pick(g, 1, 3); r > 0; --r) {
        const auto label = pick(g, 0, 58) * 7;
        pairs.push_back({i, label});
        used.insert(label);
      }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (const auto& [p, q] : ratios) {
      const auto subset = sample_fewshot(pairs, FewShotMode::kLabelCoverage, double(p) / double(q), seed);
      std::set<std::uint64_t> labels;
      for (const auto& pair : subset.pairs) labels.insert(pair.label_id);
      ++coverage_checks;
      coverage_bad += labels.size() != (p * used.size() + q - 1) / q;
    }
  }
  ok = ok && coverage_bad == 0;
  detail += fmt::format("label coverage: {} of {} subsets off the ceil(ratio x L_used) count", coverage_bad,
                        coverage_checks);
  return {ok, detail};
}

// ---------------------------------------------------------------- determinism

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("maclr_acceptance_{}", ::getpid());
  fs::remove_all(root);
  const auto corpus = root / "corpus";
  auto args = [&](const std::string& cmd, const fs::path& out) {
    return std::vector<std::string>{cmd, "--out-dir", out.string(), "--seed", "1",
                                    "--set", "instances=" + (corpus / "instances.jsonl").string(),
                                    "--set", "labels=" + (corpus / "labels.jsonl").string(),
                                    "--set", "eval_instances=" + (corpus / "test_instances.jsonl").string(),
                                    "--set", "eval_pairs=" + (corpus / "test_pairs.tsv").string(),
                                    "--set", "vocab=" + (corpus / "vocab.txt").string()};
  };
  bool ok = cli::run({"synth", "--out-dir", corpus.string(), "--set", "synth_seed=1"}) == 0 &&
            cli::run(args("build-vocab", corpus)) == 0;
  for (const char* run_dir : {"a", "b"})
    for (const char* cmd : {"pretrain", "selftrain", "eval"}) ok = ok && cli::run(args(cmd, root / run_dir)) == 0;
  std::string detail = ok ? "" : "a pipeline command failed; ";
  std::size_t identical = 0;
  for (const char* f : {"stage1.ckpt", "stage2.ckpt", "metrics.json"}) {
    const auto a = read_bytes(root / "a" / f), b = read_bytes(root / "b" / f);
    const bool same = !a.empty() && a == b;
    identical += same;
    detail += fmt::format("{} {}; ", f, same ? "identical" : "DIFFERS");
  }
  ok = ok && identical == 3;
  fs::remove_all(root);
  detail += "pretrain -> selftrain -> eval run twice";
  return {ok, detail};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  using Clock = std::chrono::steady_clock;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    failures += !o.pass;
    fmt::print("{} {:>2} {} ({:.1f}s): {}\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail);
    std::fflush(stdout);
  };

  report(1, "gradient oracle", gradient_oracle);
  report(2, "reduction identity", reduction_identity);
  report(3, "closed-form loss values", closed_forms);
  report(4, "k-means", kmeans_checks);

  std::vector<SeedRun> runs;
  std::string run_error;
  const auto runs_start = Clock::now();
  try {
    for (std::uint64_t seed : {1, 2, 3}) runs.push_back(synthetic_run(seed));
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  const double runs_secs = std::chrono::duration<double>(Clock::now() - runs_start).count();
  auto needs_runs = [&](const std::function<Outcome()>& f) {
    return [&, f] { return run_error.empty() ? f() : Outcome{false, "synthetic runs threw: " + run_error}; };
  };
  report(5, "schedule conformance", needs_runs([&] {
           std::vector<TrainLog> logs;
           for (const auto& r : runs) logs.push_back(r.stage1_log);
           return schedule_conformance(logs, runs.front().ict_pairs);
         }));
  report(6, "metric oracle", metric_oracle);
  report(7, "TF-IDF exactness", tfidf_exactness);
  report(8, "pseudo-pair correctness", pseudo_pairs);
  report(9, "synthetic zero-shot", needs_runs([&] {
           auto o = synthetic_zero_shot(runs);
           o.detail += fmt::format(" (3 seeds trained in {:.1f}s)", runs_secs);
           return o;
         }));
  report(10, "few-shot non-degradation", needs_runs([&] { return fewshot(runs); }));
  report(11, "determinism", determinism);

  fmt::print("{} of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
