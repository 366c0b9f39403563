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


#ifndef MACLR_CLI_COMMANDS_HPP_
#define MACLR_CLI_COMMANDS_HPP_

#include <string>
#include <vector>

#include "maclr_cli/run_config.hpp"

namespace maclr::cli {

void cmd_synth(const RunConfig& config);
void cmd_build_vocab(const RunConfig& config);
void cmd_tfidf(const RunConfig& config);
void cmd_pretrain(const RunConfig& config);
void cmd_selftrain(const RunConfig& config);
void cmd_finetune(const RunConfig& config);
void cmd_predict(const RunConfig& config);
void cmd_eval(const RunConfig& config);

// Parses argv and runs one command. Returns the process exit code:
// 0 success, 1 usage/config, 2 data integrity, 3 numeric failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace maclr::cli

#endif  // MACLR_CLI_COMMANDS_HPP_
