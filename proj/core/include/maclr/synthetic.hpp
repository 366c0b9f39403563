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

#ifndef MACLR_SYNTHETIC_HPP_
#define MACLR_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "maclr/corpus.hpp"

namespace maclr {

// Planted-topic corpus: each topic owns a disjoint word list drawn with a
// Zipf profile, and every sentence mixes topic words with shared noise words.
// Label t is the text of topic t's most frequent words.
struct SyntheticConfig {
  std::size_t topics = 20;
  std::size_t train_instances = 2000;
  std::size_t test_instances = 500;
  std::size_t topic_words = 40;
  std::size_t noise_words = 300;
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 5;
  std::size_t min_sentence_words = 5;
  std::size_t max_sentence_words = 10;
  double topic_fraction = 0.5;
  std::size_t label_words = 3;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  Corpus train;  // instances, labels and the true (instance, topic) pairs
  std::vector<Instance> test_instances;
  std::vector<PositivePair> test_pairs;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config);

}  // namespace maclr

#endif  // MACLR_SYNTHETIC_HPP_
