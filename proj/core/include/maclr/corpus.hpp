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

#ifndef MACLR_CORPUS_HPP_
#define MACLR_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace maclr {

using TokenId = std::uint32_t;
using TokenIds = std::vector<TokenId>;

struct Instance {
  std::uint64_t id = 0;
  std::string text;
};

struct Label {
  std::uint64_t id = 0;
  std::string text;
};

struct PositivePair {
  std::uint64_t instance_id = 0;
  std::uint64_t label_id = 0;

  friend auto operator<=>(const PositivePair&, const PositivePair&) = default;
};

struct Corpus {
  std::vector<Instance> instances;  // sorted by id
  std::vector<Label> labels;        // sorted by id
  std::vector<PositivePair> pairs;  // sorted, deduplicated
  std::size_t duplicate_pairs = 0;
  std::size_t empty_texts = 0;
};

// JSON-lines of {"id": int, "text": string}. Result is sorted by id.
std::vector<Instance> load_instances(const std::filesystem::path& path);
std::vector<Label> load_labels(const std::filesystem::path& path);

// Tab-separated "instance_id<TAB>label_id" lines. Duplicates are dropped
// (counted in *duplicates when given); blank lines are ignored.
std::vector<PositivePair> load_pairs(const std::filesystem::path& path,
                                     std::size_t* duplicates = nullptr);

// Rejects pairs whose ids do not resolve against the given collections.
void check_pairs(std::span<const PositivePair> pairs, std::span<const Instance> instances,
                 std::span<const Label> labels);

Corpus load_corpus(const std::filesystem::path& instances_path,
                   const std::filesystem::path& labels_path,
                   const std::optional<std::filesystem::path>& pairs_path = std::nullopt);

// Lowercase, whitespace split, strip leading/trailing punctuation, drop empties.
std::vector<std::string> tokenize(std::string_view text);

// Splits after '.', '!' or '?' when followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view text);

class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // `tokens` are the non-UNK entries in id order starting at 1.
  Vocabulary(std::vector<std::string> tokens, std::size_t min_frequency);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t min_frequency() const noexcept { return min_frequency_; }

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  TokenIds encode(std::span<const std::string> tokens,
                  std::size_t max_len = static_cast<std::size_t>(-1)) const;

  // FNV-1a over the newline-joined token list; stored in checkpoints.
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t min_frequency_ = 1;
};

// Counts tokens over instance and label text together. Ids are assigned by
// descending frequency, ties broken lexicographically.
Vocabulary build_vocab(std::span<const Instance> instances, std::span<const Label> labels,
                       std::size_t min_frequency = 2);

struct IctPair {
  TokenIds context;
  TokenIds title;
  std::uint64_t source_instance = 0;
};

struct IctPairs {
  std::vector<IctPair> pairs;
  std::size_t skipped = 0;
};

// (context, title) pairs: the first sentence is the title, the remaining
// sentences the context. Single-sentence text is split in half by tokens.
IctPairs make_ict_pairs(std::span<const Instance> instances, const Vocabulary& vocab,
                        std::size_t instance_max_len = 288, std::size_t label_max_len = 64);

enum class FewShotMode { kLabelCoverage, kPairRatio };

std::string_view to_string(FewShotMode mode);
FewShotMode parse_fewshot_mode(std::string_view text);

struct FewShotSubset {
  std::vector<PositivePair> pairs;
  FewShotMode mode = FewShotMode::kPairRatio;
  double ratio = 1.0;
  std::uint64_t seed = 0;
};

// ceil(ratio * n), robust to representation error in ratio.
std::size_t ratio_count(double ratio, std::size_t n);

FewShotSubset sample_fewshot(std::span<const PositivePair> pairs, FewShotMode mode, double ratio,
                             std::uint64_t seed);

}  // namespace maclr

#endif  // MACLR_CORPUS_HPP_
