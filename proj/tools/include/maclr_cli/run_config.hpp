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


#ifndef MACLR_CLI_RUN_CONFIG_HPP_
#define MACLR_CLI_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "maclr/corpus.hpp"
#include "maclr/pipeline.hpp"
#include "maclr/synthetic.hpp"

namespace maclr::cli {

using Entries = std::vector<std::pair<std::string, std::string>>;

// Everything a command may read. Empty paths fall back to files inside
// out_dir (see the resolve helpers).
struct RunConfig {
  std::string preset = "desk";

  std::filesystem::path instances;
  std::filesystem::path labels;
  std::filesystem::path pairs;
  std::filesystem::path eval_instances;  // defaults to instances
  std::filesystem::path eval_pairs;      // defaults to pairs
  std::filesystem::path vocab;           // defaults to out_dir/vocab.txt
  std::filesystem::path init_checkpoint; // defaults per command
  std::filesystem::path checkpoint;      // defaults to out_dir/stage2.ckpt
  std::filesystem::path out_dir;

  TrainConfig train = desk_train_config();
  ModelConfig model = desk_model_config();
  std::size_t min_frequency = 2;
  std::string scorer = "encoder";  // or "tfidf"
  std::size_t predict_k = 100;
  std::uint64_t log_interval = 1;

  FewShotMode fewshot_mode = FewShotMode::kPairRatio;
  double fewshot_ratio = 0.05;
  std::uint64_t fewshot_seed = 0;

  SyntheticConfig synth;

  std::filesystem::path vocab_path() const;
  std::filesystem::path eval_instances_path() const;
  std::filesystem::path eval_pairs_path() const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path output(const std::string& name) const;
};

// key = value lines; '#' starts a comment. Throws ConfigError on lines
// without '=' or with an empty key, listing every bad line.
Entries parse_config_text(const std::string& text);
Entries read_config_file(const std::filesystem::path& path);

// Applies `preset` first, then every other entry in order. Throws
// ConfigError naming every unknown key and every invalid value.
RunConfig make_run_config(const Entries& entries);

// Every accepted key.
std::vector<std::string> config_keys();

// Throws ConfigError listing the required keys that are unset.
void require(const RunConfig& config, const std::vector<std::string>& keys);

}  // namespace maclr::cli

#endif  // MACLR_CLI_RUN_CONFIG_HPP_
