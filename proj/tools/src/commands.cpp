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


#include "maclr_cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "maclr/encoder.hpp"
#include "maclr/errors.hpp"
#include "maclr/io.hpp"
#include "maclr/retrieval.hpp"
#include "maclr/tfidf.hpp"

namespace maclr::cli {
namespace {

namespace fs = std::filesystem;

void prepare_out_dir(const RunConfig& c) {
  require(c, {"out_dir"});
  fs::create_directories(c.out_dir);
}

template <typename Rows, typename Fn>
void write_jsonl_rows(const fs::path& path, const Rows& rows, Fn to_json) {
  write_atomic(path, [&](std::ostream& out) {
    for (const auto& r : rows) out << to_json(r).dump() << '\n';
  });
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void write_pairs(const fs::path& path, std::span<const PositivePair> pairs) {
  write_atomic(path, [&](std::ostream& out) {
    for (const auto& p : pairs) out << p.instance_id << '\t' << p.label_id << '\n';
  });
}

TrainingData load_training_data(const RunConfig& c) {
  require(c, {"instances", "labels"});
  auto instances = load_instances(c.instances);
  auto labels = load_labels(c.labels);
  auto vocab = Vocabulary::load(c.vocab_path());
  return TrainingData::prepare(instances, labels, std::move(vocab), c.train.instance_max_len,
                               c.train.label_max_len);
}

EncoderParams load_params(const fs::path& path, const Vocabulary& vocab) {
  return load_checkpoint(path, vocab.hash()).params;
}

void save_result(const RunConfig& c, const TrainResult& r, const Vocabulary& vocab,
                 const std::string& stem) {
  save_checkpoint(r.params, vocab.hash(), c.output(stem + ".ckpt"));
  write_atomic(c.output(stem + "_log.jsonl"),
               [&](std::ostream& out) { r.log.write_jsonl(out, c.log_interval); });
  spdlog::info("wrote {} and {}", c.output(stem + ".ckpt").string(),
               c.output(stem + "_log.jsonl").string());
}

struct EvalSet {
  std::vector<std::uint64_t> ids;
  std::vector<TokenIds> tokens;
};

EvalSet load_eval_set(const RunConfig& c, const TrainingData& data) {
  auto instances = load_instances(c.eval_instances_path());
  EvalSet out;
  for (const auto& i : instances) out.ids.push_back(i.id);
  out.tokens = tokenize_instances(instances, data.vocab, c.train.instance_max_len);
  return out;
}

std::vector<RankedPrediction> predict_all(const RunConfig& c, const TrainingData& data,
                                          const EvalSet& eval, std::size_t k,
                                          const std::string& scorer) {
  const std::size_t workers = c.train.workers;
  if (scorer == "tfidf") {
    const auto idf = fit_instance_idf(data);
    std::vector<SparseVector> queries, labels;
    for (const auto& t : eval.tokens) queries.push_back(vectorize(without_unk(t), idf));
    for (const auto& t : data.label_tokens) labels.push_back(vectorize(without_unk(t), idf));
    return sparse_predict(queries, eval.ids, labels, data.label_ids, k, workers);
  }
  const auto params = load_params(c.checkpoint_path(), data.vocab);
  const auto index = build_label_index(params, data.label_tokens, data.label_ids, workers);
  return topk_batch(index, encode_batch(params, eval.tokens, workers), eval.ids, k, workers);
}

MetricsReport score(const RunConfig& c, std::span<const RankedPrediction> predictions,
                    const TrainingData& data, const EvalSet& eval) {
  if (c.eval_pairs_path().empty()) throw ConfigError("missing required key 'eval_pairs' (or 'pairs')");
  const auto pairs = load_pairs(c.eval_pairs_path());
  for (const auto& p : pairs) {
    if (!std::binary_search(eval.ids.begin(), eval.ids.end(), p.instance_id))
      throw IntegrityError("eval pair references unknown instance " + std::to_string(p.instance_id));
    if (!std::binary_search(data.label_ids.begin(), data.label_ids.end(), p.label_id))
      throw IntegrityError("eval pair references unknown label " + std::to_string(p.label_id));
  }
  return compute_metrics(predictions, truth_from_pairs(pairs), kDefaultKs);
}

std::size_t eval_depth() { return kDefaultKs.back(); }

}  // namespace

void cmd_synth(const RunConfig& c) {
  prepare_out_dir(c);
  const auto corpus = make_synthetic_corpus(c.synth);
  auto text_row = [](const auto& r) { return nlohmann::ordered_json{{"id", r.id}, {"text", r.text}}; };
  write_jsonl_rows(c.output("instances.jsonl"), corpus.train.instances, text_row);
  write_jsonl_rows(c.output("labels.jsonl"), corpus.train.labels, text_row);
  write_pairs(c.output("train_pairs.tsv"), corpus.train.pairs);
  write_jsonl_rows(c.output("test_instances.jsonl"), corpus.test_instances, text_row);
  write_pairs(c.output("test_pairs.tsv"), corpus.test_pairs);
  spdlog::info("wrote synthetic corpus with {} topics to {}", c.synth.topics, c.out_dir.string());
}

void cmd_build_vocab(const RunConfig& c) {
  require(c, {"instances", "labels"});
  prepare_out_dir(c);
  const auto instances = load_instances(c.instances);
  const auto labels = load_labels(c.labels);
  const auto vocab = build_vocab(instances, labels, c.min_frequency);
  vocab.save(c.output("vocab.txt"));
  spdlog::info("vocabulary of {} tokens written to {}", vocab.size(), c.output("vocab.txt").string());
}

void cmd_tfidf(const RunConfig& c) {
  prepare_out_dir(c);
  const auto data = load_training_data(c);
  const auto eval = load_eval_set(c, data);
  const auto predictions = predict_all(c, data, eval, std::max(c.predict_k, eval_depth()), "tfidf");
  write_atomic(c.output("tfidf_predictions.tsv"),
               [&](std::ostream& out) { write_predictions(out, predictions); });
  write_json(c.output("tfidf_metrics.json"), score(c, predictions, data, eval).to_json());
}

void cmd_pretrain(const RunConfig& c) {
  prepare_out_dir(c);
  const auto data = load_training_data(c);
  auto rng = Rng::stream(c.train.seed, "init");
  auto params = init_encoder(data.vocab.size(), c.model.token_dim, c.model.embed_dim,
                             c.model.dropout, rng);
  save_result(c, run_stage1(data, std::move(params), c.train), data.vocab, "stage1");
}

void cmd_selftrain(const RunConfig& c) {
  prepare_out_dir(c);
  const auto data = load_training_data(c);
  auto params = load_params(c.init_checkpoint.empty() ? c.output("stage1.ckpt") : c.init_checkpoint,
                            data.vocab);
  const auto pseudo =
      build_pseudo_pairs(data, params, fit_instance_idf(data), c.train.k_pseudo, c.train.workers);
  write_atomic(c.output("pseudo_pairs.tsv"), [&](std::ostream& out) {
    for (const auto& p : pseudo.pairs)
      out << p.instance_id << '\t' << p.label_id << '\t' << int(p.sources) << '\n';
  });
  save_result(c, run_stage2(data, std::move(params), pseudo, c.train), data.vocab, "stage2");
}

void cmd_finetune(const RunConfig& c) {
  require(c, {"pairs"});
  prepare_out_dir(c);
  const auto data = load_training_data(c);
  auto params = load_params(c.init_checkpoint.empty() ? c.output("stage2.ckpt") : c.init_checkpoint,
                            data.vocab);
  const auto pairs = load_pairs(c.pairs);
  const auto subset = sample_fewshot(pairs, c.fewshot_mode, c.fewshot_ratio, c.fewshot_seed);
  write_pairs(c.output("fewshot_pairs.tsv"), subset.pairs);
  save_result(c, finetune(data, std::move(params), subset, c.train), data.vocab, "finetune");
}

void cmd_predict(const RunConfig& c) {
  prepare_out_dir(c);
  const auto data = load_training_data(c);
  const auto eval = load_eval_set(c, data);
  const auto predictions = predict_all(c, data, eval, c.predict_k, c.scorer);
  write_atomic(c.output("predictions.tsv"),
               [&](std::ostream& out) { write_predictions(out, predictions); });
}

void cmd_eval(const RunConfig& c) {
  prepare_out_dir(c);
  const auto data = load_training_data(c);
  const auto eval = load_eval_set(c, data);
  const auto predictions = predict_all(c, data, eval, eval_depth(), c.scorer);
  const auto report = score(c, predictions, data, eval);
  write_json(c.output("metrics.json"), report.to_json());
  spdlog::info("R@5 {:.4f} over {} instances", report.recall.at(5), report.instances);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"maclr: self-supervised zero-shot multi-label retrieval"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> sets;

  using Command = void (*)(const RunConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"synth", "write a planted-topic synthetic corpus", cmd_synth},
      {"build-vocab", "build the token vocabulary", cmd_build_vocab},
      {"tfidf", "TF-IDF baseline predictions and metrics", cmd_tfidf},
      {"pretrain", "Stage I: clustering + label regularization", cmd_pretrain},
      {"selftrain", "Stage II: self-training on pseudo pairs", cmd_selftrain},
      {"finetune", "few-shot fine-tuning on a sampled subset of pairs", cmd_finetune},
      {"predict", "top-k label predictions", cmd_predict},
      {"eval", "P@k / R@k metrics", cmd_eval},
  };
  Command chosen = nullptr;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--workers", workers, "worker threads");
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--set", sets, "override a config key (key=value)");
    sub->callback([&chosen, f = fn] { chosen = f; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Entries entries;
    if (!config_path.empty()) entries = read_config_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) entries.emplace_back("seed", std::to_string(*seed));
    if (workers) entries.emplace_back("workers", std::to_string(*workers));
    if (!out_dir.empty()) entries.emplace_back("out_dir", out_dir);
    chosen(make_run_config(entries));
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    switch (e.kind()) {
      case ErrorKind::kUsage: return 1;
      case ErrorKind::kData: return 2;
      case ErrorKind::kNumeric: return 3;
    }
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"maclr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace maclr::cli
