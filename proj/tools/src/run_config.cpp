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


#include "maclr_cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "maclr/errors.hpp"

namespace maclr::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("not a number: '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("not a boolean: '" + text + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <typename T, typename Get>
Setter number(Get get) {
  return [get](RunConfig& c, const std::string& v) { get(c) = parse_number<T>(v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto path = [](std::filesystem::path RunConfig::*member) {
      return [member](RunConfig& c, const std::string& v) { c.*member = v; };
    };
    t["instances"] = path(&RunConfig::instances);
    t["labels"] = path(&RunConfig::labels);
    t["pairs"] = path(&RunConfig::pairs);
    t["eval_instances"] = path(&RunConfig::eval_instances);
    t["eval_pairs"] = path(&RunConfig::eval_pairs);
    t["vocab"] = path(&RunConfig::vocab);
    t["init_checkpoint"] = path(&RunConfig::init_checkpoint);
    t["checkpoint"] = path(&RunConfig::checkpoint);
    t["out_dir"] = path(&RunConfig::out_dir);

    t["seed"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.seed; });
    t["workers"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.workers; });
    t["batch_size"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.batch_size; });
    t["label_batch_size"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.train.label_batch_size; });
    t["initial_k"] =
        number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.schedule.initial_k; });
    t["double_every"] =
        number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.schedule.double_every; });
    t["update_every"] =
        number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.schedule.update_every; });
    t["total_steps"] =
        number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.schedule.total_steps; });
    t["base_lr"] = number<double>([](RunConfig& c) -> auto& { return c.train.base_lr; });
    t["warmup_ratio"] = number<double>([](RunConfig& c) -> auto& { return c.train.warmup_ratio; });
    t["k_pseudo"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.k_pseudo; });
    t["finetune_lr"] = number<double>([](RunConfig& c) -> auto& { return c.train.finetune_lr; });
    t["finetune_steps"] =
        number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.finetune_steps; });
    t["instance_max_len"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.train.instance_max_len; });
    t["label_max_len"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.train.label_max_len; });
    t["kmeans_max_iters"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.train.kmeans_max_iters; });
    t["stratified_batches"] = [](RunConfig& c, const std::string& v) {
      c.train.stratified_batches = parse_bool(v);
    };
    t["temperature"] = number<double>([](RunConfig& c) -> auto& { return c.train.temperature; });

    t["token_dim"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.model.token_dim; });
    t["embed_dim"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.model.embed_dim; });
    t["dropout"] = number<float>([](RunConfig& c) -> auto& { return c.model.dropout; });

    t["min_frequency"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.min_frequency; });
    t["scorer"] = [](RunConfig& c, const std::string& v) {
      if (v != "encoder" && v != "tfidf") throw std::invalid_argument("expected encoder or tfidf");
      c.scorer = v;
    };
    t["predict_k"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.predict_k; });
    t["log_interval"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.log_interval; });

    t["fewshot_mode"] = [](RunConfig& c, const std::string& v) {
      c.fewshot_mode = parse_fewshot_mode(v);
    };
    t["fewshot_ratio"] = number<double>([](RunConfig& c) -> auto& { return c.fewshot_ratio; });
    t["fewshot_seed"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.fewshot_seed; });

    t["synth_topics"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.topics; });
    t["synth_train_instances"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.train_instances; });
    t["synth_test_instances"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.test_instances; });
    t["synth_topic_words"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.topic_words; });
    t["synth_noise_words"] =
        number<std::size_t>([](RunConfig& c) -> auto& { return c.synth.noise_words; });
    t["synth_topic_fraction"] =
        number<double>([](RunConfig& c) -> auto& { return c.synth.topic_fraction; });
    t["synth_seed"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.synth.seed; });
    t["preset"] = [](RunConfig&, const std::string&) {};
    return t;
  }();
  return table;
}

[[noreturn]] void fail(const std::string& what, const std::vector<std::string>& problems) {
  std::string msg = what;
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

}  // namespace

std::filesystem::path RunConfig::output(const std::string& name) const { return out_dir / name; }

std::filesystem::path RunConfig::vocab_path() const {
  return vocab.empty() ? output("vocab.txt") : vocab;
}

std::filesystem::path RunConfig::eval_instances_path() const {
  return eval_instances.empty() ? instances : eval_instances;
}

std::filesystem::path RunConfig::eval_pairs_path() const {
  return eval_pairs.empty() ? pairs : eval_pairs;
}

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? output("stage2.ckpt") : checkpoint;
}

Entries parse_config_text(const std::string& text) {
  Entries out;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      problems.push_back("line " + std::to_string(n) + ": expected 'key = value'");
      continue;
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!problems.empty()) fail("malformed config:", problems);
  return out;
}

Entries read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

RunConfig make_run_config(const Entries& entries) {
  RunConfig c;
  std::vector<std::string> problems;
  for (const auto& [key, value] : entries) {
    if (key != "preset") continue;
    if (value == "desk") {
      c.train = desk_train_config();
      c.model = desk_model_config();
    } else if (value == "paper") {
      c.train = paper_train_config();
      c.model = paper_model_config();
    } else {
      problems.push_back("invalid value for 'preset': expected desk or paper");
    }
    c.preset = value;
  }
  const auto& table = setters();
  for (const auto& [key, value] : entries) {
    const auto it = table.find(key);
    if (it == table.end()) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      it->second(c, value);
    } catch (const std::exception& e) {
      problems.push_back("invalid value for '" + key + "': " + e.what());
    }
  }
  if (problems.empty()) {
    try {
      c.train.validate();
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
    if (c.model.token_dim == 0 || c.model.embed_dim == 0)
      problems.push_back("token_dim and embed_dim must be positive");
    if (!(c.model.dropout >= 0.0f && c.model.dropout < 1.0f))
      problems.push_back("dropout must be in [0, 1)");
    if (c.predict_k == 0) problems.push_back("predict_k must be positive");
    if (c.log_interval == 0) problems.push_back("log_interval must be positive");
    if (c.min_frequency == 0) problems.push_back("min_frequency must be positive");
  }
  if (!problems.empty()) fail("invalid configuration:", problems);
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void require(const RunConfig& c, const std::vector<std::string>& keys) {
  const std::map<std::string, const std::filesystem::path*> paths = {
      {"instances", &c.instances}, {"labels", &c.labels}, {"pairs", &c.pairs},
      {"out_dir", &c.out_dir}};
  std::vector<std::string> missing;
  for (const auto& k : keys) {
    const auto it = paths.find(k);
    if (it != paths.end() && it->second->empty()) missing.push_back("missing required key '" + k + "'");
  }
  if (!missing.empty()) fail("incomplete configuration:", missing);
}

}  // namespace maclr::cli
