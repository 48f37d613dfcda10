// Copyright 2026 The Quarry Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Benchmark construction: deeply buried single-answer questions,
// multi-source multi-answer questions and the paper matching task.

#ifndef QUARRY_BENCHBUILD_H_
#define QUARRY_BENCHBUILD_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "quarry/corpus.h"
#include "quarry/io.h"
#include "quarry/triples.h"

namespace quarry {

class Gateway;
class PromptLibrary;
struct ModelHandle;

enum class ItemKind { kDeep, kMulti, kMatching };

std::string_view item_kind_name(ItemKind kind);
ItemKind parse_item_kind(std::string_view name);

struct SourceTriple {
  std::string subject;
  std::string relation;
  std::string object;
  bool operator==(const SourceTriple&) const = default;
};

struct BenchmarkItem {
  std::string id;
  ItemKind kind = ItemKind::kDeep;
  std::string question;  // empty for matching items
  std::vector<std::string> golds;
  std::vector<std::string> source_docs;
  std::vector<SourceTriple> source_triples;
  std::optional<MatchingItem> pair;

  bool operator==(const BenchmarkItem&) const = default;
};

// Keeps (s, r) keys with exactly one (object, doc) entry whose subject and
// object each occur exactly once (case-insensitive, non-overlapping) in the
// document's abstract. Ids are "deep-00001", ... in key order. Questions
// are left empty.
std::vector<BenchmarkItem> filter_deep_insight(const TripleIndex& index,
                                               const Corpus& corpus);

// Keeps (s, r) keys with at least two distinct objects drawn from at least
// two distinct documents. Golds and source docs keep first-seen order.
std::vector<BenchmarkItem> filter_multi_source(const TripleIndex& index);

std::vector<BenchmarkItem> build_matching_bench(
    const std::vector<MatchingItem>& pairs);

// True when any gold occurs in `question`, case-insensitively.
bool question_leaks_gold(const std::string& question,
                         const std::vector<std::string>& golds);

struct QuestionGenStats {
  std::size_t generated = 0;
  std::size_t regenerated = 0;    // first attempt leaked a gold
  std::size_t dropped_leak = 0;   // second attempt leaked too
  std::size_t dropped_error = 0;  // transport failure after retries
};

// Fills the question of every deep or multi item with the question
// generator. A leaking question is regenerated once; items that still leak
// or whose calls fail are dropped and counted. Output keeps input order.
std::vector<BenchmarkItem> generate_questions(
    const std::vector<BenchmarkItem>& items, Gateway& gateway,
    const ModelHandle& qgen, const PromptLibrary& prompts,
    QuestionGenStats* stats = nullptr);

// Throws Error naming the item id when a kind invariant does not hold.
void validate_item(const BenchmarkItem& item);

Json to_json(const BenchmarkItem& item);
BenchmarkItem benchmark_item_from_json(const Json& j);

// Validates every item, then writes one JSON record per line atomically.
std::size_t emit_benchmark(const std::vector<BenchmarkItem>& items,
                           const std::filesystem::path& path);
std::string serialize_benchmark(const std::vector<BenchmarkItem>& items);
std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path);

struct DatasetStats {
  std::size_t deep = 0;
  std::size_t multi = 0;
  std::size_t matching = 0;
  bool operator==(const DatasetStats&) const = default;
};

DatasetStats dataset_stats(const std::vector<BenchmarkItem>& items);

// Review file: one row per item, "id<TAB>decision<TAB>kind<TAB>question<TAB>
// golds". Decisions are "accept" or "reject"; writers emit "accept".
std::string review_tsv(const std::vector<BenchmarkItem>& items);
// Drops rejected items. Items missing from the review are kept; unknown
// ids and malformed decisions are errors.
std::vector<BenchmarkItem> apply_review(const std::vector<BenchmarkItem>& items,
                                        const std::filesystem::path& review);

}  // namespace quarry

#endif  // QUARRY_BENCHBUILD_H_
