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


#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "maclr/errors.hpp"
#include "maclr/synthetic.hpp"

namespace maclr {
namespace {

std::set<std::string> words_of(const std::string& text) {
  std::set<std::string> out;
  for (const auto& w : tokenize(text)) out.insert(w);
  return out;
}

TEST(Synthetic, CountsAndIds) {
  auto c = make_synthetic_corpus({});
  EXPECT_EQ(c.train.instances.size(), 2000u);
  EXPECT_EQ(c.test_instances.size(), 500u);
  EXPECT_EQ(c.train.labels.size(), 20u);
  EXPECT_EQ(c.train.pairs.size(), 2000u);
  EXPECT_EQ(c.test_pairs.size(), 500u);
  EXPECT_EQ(c.train.instances.front().id, 0u);
  EXPECT_EQ(c.test_instances.front().id, 2000u);
  for (std::size_t t = 0; t < 20; ++t) {
    EXPECT_EQ(c.train.labels[t].id, t);
    EXPECT_EQ(c.train.labels[t].text, "t" + std::to_string(t) + "w0 t" + std::to_string(t) + "w1 t" +
                                          std::to_string(t) + "w2");
  }
}

TEST(Synthetic, SameSeedSameCorpus) {
  SyntheticConfig cfg;
  cfg.train_instances = 50;
  cfg.test_instances = 10;
  cfg.seed = 9;
  auto a = make_synthetic_corpus(cfg), b = make_synthetic_corpus(cfg);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a.train.instances[i].text, b.train.instances[i].text);
  cfg.seed = 10;
  auto c = make_synthetic_corpus(cfg);
  std::size_t same = 0;
  for (std::size_t i = 0; i < 50; ++i) same += a.train.instances[i].text == c.train.instances[i].text;
  EXPECT_LT(same, 5u);
}

TEST(Synthetic, InstancesUseOnlyTheirTopicAndNoise) {
  SyntheticConfig cfg;
  cfg.train_instances = 200;
  cfg.test_instances = 50;
  cfg.seed = 3;
  auto c = make_synthetic_corpus(cfg);
  auto check = [&](const Instance& inst, std::uint64_t topic) {
    const std::string own = "t" + std::to_string(topic) + "w";
    bool any_topic = false;
    for (const auto& w : words_of(inst.text)) {
      if (w == ".") continue;
      if (w[0] == 'n') continue;
      EXPECT_EQ(w.rfind(own, 0), 0u) << w << " in instance of topic " << topic;
      any_topic = true;
    }
    EXPECT_TRUE(any_topic);
  };
  for (const auto& p : c.train.pairs) check(c.train.instances[p.instance_id], p.label_id);
  for (const auto& p : c.test_pairs) check(c.test_instances[p.instance_id - 200], p.label_id);
}

TEST(Synthetic, SentenceCountsWithinBounds) {
  SyntheticConfig cfg;
  cfg.train_instances = 100;
  cfg.test_instances = 1;
  auto c = make_synthetic_corpus(cfg);
  for (const auto& inst : c.train.instances) {
    auto sentences = split_sentences(inst.text);
    EXPECT_GE(sentences.size(), cfg.min_sentences);
    EXPECT_LE(sentences.size(), cfg.max_sentences);
  }
}

TEST(Synthetic, InvalidConfigRejected) {
  SyntheticConfig cfg;
  cfg.topics = 0;
  EXPECT_THROW(make_synthetic_corpus(cfg), ParameterError);
  cfg = {};
  cfg.topic_fraction = 1.5;
  EXPECT_THROW(make_synthetic_corpus(cfg), ParameterError);
  cfg = {};
  cfg.label_words = 41;
  EXPECT_THROW(make_synthetic_corpus(cfg), ParameterError);
}

}  // namespace
}  // namespace maclr
