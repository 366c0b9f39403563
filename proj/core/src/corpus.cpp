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

#include "maclr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "maclr/errors.hpp"
#include "maclr/io.hpp"
#include "maclr/numkit.hpp"

namespace maclr {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

template <typename Record>
std::vector<Record> load_text_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Record> out;
  std::set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
      throw ParseError(where + ": expected an object with \"id\" and \"text\"");
    }
    const auto& id = obj["id"];
    if (!id.is_number_unsigned()) {
      throw ParseError(where + ": \"id\" must be a non-negative integer");
    }
    if (!obj["text"].is_string()) throw ParseError(where + ": \"text\" must be a string");
    Record r;
    r.id = id.get<std::uint64_t>();
    r.text = obj["text"].get<std::string>();
    if (!seen.insert(r.id).second) {
      throw IntegrityError(where + ": duplicate id " + std::to_string(r.id));
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const Record& a, const Record& b) { return a.id < b.id; });
  return out;
}

bool parse_u64(std::string_view field, std::uint64_t& value) {
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  return ec == std::errc() && ptr == end;
}

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::vector<Instance> load_instances(const std::filesystem::path& path) {
  return load_text_records<Instance>(path);
}

std::vector<Label> load_labels(const std::filesystem::path& path) {
  return load_text_records<Label>(path);
}

std::vector<PositivePair> load_pairs(const std::filesystem::path& path, std::size_t* duplicates) {
  auto in = open_input(path);
  std::vector<PositivePair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const auto tab = line.find('\t');
    PositivePair p;
    if (tab == std::string::npos ||
        !parse_u64(std::string_view(line).substr(0, tab), p.instance_id) ||
        !parse_u64(std::string_view(line).substr(tab + 1), p.label_id)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected \"instance_id<TAB>label_id\"");
    }
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  const auto before = out.size();
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (duplicates != nullptr) *duplicates = before - out.size();
  return out;
}

void check_pairs(std::span<const PositivePair> pairs, std::span<const Instance> instances,
                 std::span<const Label> labels) {
  std::set<std::uint64_t> instance_ids;
  std::set<std::uint64_t> label_ids;
  for (const auto& x : instances) instance_ids.insert(x.id);
  for (const auto& y : labels) label_ids.insert(y.id);
  for (const auto& p : pairs) {
    if (!instance_ids.contains(p.instance_id)) {
      throw IntegrityError("pair references unknown instance id " +
                           std::to_string(p.instance_id));
    }
    if (!label_ids.contains(p.label_id)) {
      throw IntegrityError("pair references unknown label id " + std::to_string(p.label_id));
    }
  }
}

Corpus load_corpus(const std::filesystem::path& instances_path,
                   const std::filesystem::path& labels_path,
                   const std::optional<std::filesystem::path>& pairs_path) {
  Corpus c;
  c.instances = load_instances(instances_path);
  c.labels = load_labels(labels_path);
  if (pairs_path) {
    c.pairs = load_pairs(*pairs_path, &c.duplicate_pairs);
    check_pairs(c.pairs, c.instances, c.labels);
  }
  for (const auto& x : c.instances) c.empty_texts += x.text.empty() ? 1 : 0;
  for (const auto& y : c.labels) c.empty_texts += y.text.empty() ? 1 : 0;
  if (c.empty_texts > 0) spdlog::warn("corpus contains {} empty texts", c.empty_texts);
  if (c.duplicate_pairs > 0) spdlog::info("dropped {} duplicate pairs", c.duplicate_pairs);
  return c;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && is_punct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_punct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::string_view piece) {
    std::size_t b = 0;
    std::size_t e = piece.size();
    while (b < e && std::isspace(static_cast<unsigned char>(piece[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(piece[e - 1]))) --e;
    if (b < e) out.emplace_back(piece.substr(b, e - b));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool boundary =
        i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (!boundary) continue;
    emit(text.substr(start, i + 1 - start));
    start = i + 1;
  }
  if (start < text.size()) emit(text.substr(start));
  return out;
}

Vocabulary::Vocabulary() : Vocabulary({}, 1) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t min_frequency)
    : min_frequency_(min_frequency) {
  tokens_.reserve(tokens.size() + 1);
  tokens_.emplace_back(kUnkToken);
  for (auto& t : tokens) tokens_.push_back(std::move(t));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw IntegrityError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw RangeError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

TokenIds Vocabulary::encode(std::span<const std::string> tokens, std::size_t max_len) const {
  TokenIds ids;
  const auto n = std::min(tokens.size(), max_len);
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(id(tokens[i]));
  return ids;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ull;
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  write_atomic(path, [&](std::ostream& out) {
    for (const auto& t : tokens_) out << t << '\n';
  });
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::vector<std::string> tokens;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 0) {
      if (line != kUnkToken) {
        throw FormatError(path.string() + ": line 1 must be \"" + std::string(kUnkToken) + "\"");
      }
    } else {
      if (line.empty()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no + 1) + ": empty token");
      }
      tokens.push_back(line);
    }
    ++line_no;
  }
  if (line_no == 0) throw FormatError(path.string() + ": empty vocabulary file");
  return Vocabulary(std::move(tokens), 1);
}

Vocabulary build_vocab(std::span<const Instance> instances, std::span<const Label> labels,
                       std::size_t min_frequency) {
  if (min_frequency < 1) throw ParameterError("min_frequency must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& x : instances) {
    for (auto& t : tokenize(x.text)) ++counts[std::move(t)];
  }
  for (const auto& y : labels) {
    for (auto& t : tokenize(y.text)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_frequency) kept.emplace_back(tok, n);
  }
  // counts is ordered lexicographically, so a stable sort on frequency alone
  // keeps lexicographic order among ties.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  if (tokens.empty()) spdlog::warn("vocabulary is empty apart from <unk>");
  return Vocabulary(std::move(tokens), min_frequency);
}

IctPairs make_ict_pairs(std::span<const Instance> instances, const Vocabulary& vocab,
                        std::size_t instance_max_len, std::size_t label_max_len) {
  if (instance_max_len < 1 || label_max_len < 1) {
    throw ParameterError("maximum sequence lengths must be at least 1");
  }
  IctPairs out;
  for (const auto& x : instances) {
    const auto sentences = split_sentences(x.text);
    std::vector<std::string> title;
    std::vector<std::string> context;
    if (sentences.size() >= 2) {
      title = tokenize(sentences.front());
      for (std::size_t s = 1; s < sentences.size(); ++s) {
        for (auto& t : tokenize(sentences[s])) context.push_back(std::move(t));
      }
      if (title.size() > label_max_len) title.resize(label_max_len);
    } else {
      auto tokens = tokenize(x.text);
      const std::size_t half = std::min((tokens.size() + 1) / 2, label_max_len);
      title.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(half));
      context.assign(tokens.begin() + static_cast<std::ptrdiff_t>(half), tokens.end());
    }
    if (title.empty() || context.empty()) {
      ++out.skipped;
      continue;
    }
    IctPair pair;
    pair.title = vocab.encode(title, label_max_len);
    pair.context = vocab.encode(context, instance_max_len);
    pair.source_instance = x.id;
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

std::string_view to_string(FewShotMode mode) {
  return mode == FewShotMode::kLabelCoverage ? "label-coverage" : "pair-ratio";
}

FewShotMode parse_fewshot_mode(std::string_view text) {
  if (text == "label-coverage") return FewShotMode::kLabelCoverage;
  if (text == "pair-ratio") return FewShotMode::kPairRatio;
  throw ParameterError("unknown few-shot mode '" + std::string(text) +
                       "' (expected label-coverage or pair-ratio)");
}

std::size_t ratio_count(double ratio, std::size_t n) {
  const double raw = ratio * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::min(count, n);
}

FewShotSubset sample_fewshot(std::span<const PositivePair> pairs, FewShotMode mode, double ratio,
                             std::uint64_t seed) {
  if (pairs.empty()) throw PreconditionError("sample_fewshot: no pairs to sample from");
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw PreconditionError("sample_fewshot: ratio must lie in (0, 1]");
  }
  FewShotSubset subset;
  subset.mode = mode;
  subset.ratio = ratio;
  subset.seed = seed;
  auto rng = Rng::stream(seed, "fewshot");
  if (mode == FewShotMode::kPairRatio) {
    auto picks = rng.sample_without_replacement(pairs.size(), ratio_count(ratio, pairs.size()));
    std::sort(picks.begin(), picks.end());
    for (auto i : picks) subset.pairs.push_back(pairs[i]);
    return subset;
  }
  std::set<std::uint64_t> label_set;
  for (const auto& p : pairs) label_set.insert(p.label_id);
  const std::vector<std::uint64_t> labels(label_set.begin(), label_set.end());
  std::set<std::uint64_t> chosen;
  for (auto i : rng.sample_without_replacement(labels.size(), ratio_count(ratio, labels.size()))) {
    chosen.insert(labels[i]);
  }
  for (const auto& p : pairs) {
    if (chosen.contains(p.label_id)) subset.pairs.push_back(p);
  }
  return subset;
}

}  // namespace maclr
