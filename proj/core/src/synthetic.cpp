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

#include "maclr/synthetic.hpp"

#include <string>

#include "maclr/errors.hpp"
#include "maclr/numkit.hpp"

namespace maclr {

namespace {

std::string topic_word(std::size_t topic, std::size_t rank) {
  return "t" + std::to_string(topic) + "w" + std::to_string(rank);
}

std::string noise_word(std::size_t i) { return "n" + std::to_string(i); }

class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) : cumulative_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += 1.0 / static_cast<double>(r + 1);
      cumulative_[r] = total;
    }
    for (auto& c : cumulative_) c /= total;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    for (std::size_t r = 0; r < cumulative_.size(); ++r) {
      if (u < cumulative_[r]) return r;
    }
    return cumulative_.size() - 1;
  }

 private:
  std::vector<double> cumulative_;
};

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(hi - lo + 1);
}

std::string make_document(std::size_t topic, const SyntheticConfig& c, const ZipfSampler& zipf,
                          Rng& rng) {
  std::string text;
  const auto sentences = between(rng, c.min_sentences, c.max_sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    const auto words = between(rng, c.min_sentence_words, c.max_sentence_words);
    for (std::size_t w = 0; w < words; ++w) {
      if (!text.empty()) text += ' ';
      if (rng.uniform() < c.topic_fraction) {
        text += topic_word(topic, zipf(rng));
      } else {
        text += noise_word(rng.below(c.noise_words));
      }
    }
    text += '.';
  }
  return text;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& c) {
  if (c.topics == 0 || c.topic_words == 0 || c.noise_words == 0 || c.label_words == 0 ||
      c.label_words > c.topic_words || c.min_sentences == 0 ||
      c.min_sentences > c.max_sentences || c.min_sentence_words == 0 ||
      c.min_sentence_words > c.max_sentence_words || !(c.topic_fraction > 0.0) ||
      c.topic_fraction > 1.0) {
    throw ParameterError("invalid synthetic corpus configuration");
  }
  auto rng = Rng::stream(c.seed, "synthetic");
  const ZipfSampler zipf(c.topic_words);
  SyntheticCorpus out;
  for (std::size_t t = 0; t < c.topics; ++t) {
    std::string text;
    for (std::size_t w = 0; w < c.label_words; ++w) {
      if (w > 0) text += ' ';
      text += topic_word(t, w);
    }
    out.train.labels.push_back({t, text});
  }
  for (std::size_t i = 0; i < c.train_instances; ++i) {
    const auto topic = rng.below(c.topics);
    out.train.instances.push_back({i, make_document(topic, c, zipf, rng)});
    out.train.pairs.push_back({i, topic});
  }
  for (std::size_t i = 0; i < c.test_instances; ++i) {
    const auto id = c.train_instances + i;
    const auto topic = rng.below(c.topics);
    out.test_instances.push_back({id, make_document(topic, c, zipf, rng)});
    out.test_pairs.push_back({id, topic});
  }
  return out;
}

}  // namespace maclr
