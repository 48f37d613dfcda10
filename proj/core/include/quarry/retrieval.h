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

// Exact cosine retrieval over documents or linearized triples, index
// persistence, and retrieval-quality scoring.

#ifndef QUARRY_RETRIEVAL_H_
#define QUARRY_RETRIEVAL_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "quarry/benchbuild.h"
#include "quarry/embedding.h"

namespace quarry {

enum class Granularity { kDocument, kTriple };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);

struct IndexEntry {
  std::string id;
  Vector vector;  // unit norm
  std::string payload;
  bool operator==(const IndexEntry&) const = default;
};

struct Ranked {
  std::string id;
  double score = 0.0;
  bool operator==(const Ranked&) const = default;
};

struct RetrievalResult {
  std::string query;
  std::vector<Ranked> ranked;  // score descending, ties by ascending id
};

class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(Granularity granularity, std::size_t dim, std::string embedder_id);

  // Embeds `items` (id, text) and builds the index. Throws Error on
  // duplicate ids or dimension mismatch.
  static VectorIndex build(const std::vector<std::pair<std::string, std::string>>& items,
                           Granularity granularity, Embedder& embedder,
                           std::size_t parallelism = 4);

  // Adds a pre-normalized vector. Throws Error on duplicate id, wrong
  // dimension or a norm outside 1 +- 1e-6.
  void add(IndexEntry entry);

  Granularity granularity() const { return granularity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  const std::string& embedder_id() const { return embedder_id_; }
  const IndexEntry* find(const std::string& id) const;

  // Inputs digest recorded in the manifest.
  const std::string& digest() const { return digest_; }
  void set_digest(std::string d) { digest_ = std::move(d); }

  // Exact top-k by dot product of unit vectors. k larger than the index
  // returns every entry.
  std::vector<Ranked> search(const Vector& unit_query, std::size_t k) const;

  // Binary file plus "<path>.manifest" sidecar. load() checks both agree.
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

  bool operator==(const VectorIndex& other) const;

 private:
  Granularity granularity_ = Granularity::kDocument;
  std::size_t dim_ = 0;
  std::string embedder_id_;
  std::string digest_;
  std::vector<IndexEntry> entries_;
  std::map<std::string, std::size_t> by_id_;
};

// Digest of the index inputs and embedder identity.
std::string index_inputs_digest(
    const std::vector<std::pair<std::string, std::string>>& items,
    Granularity granularity, const std::string& embedder_id);

// Reads the manifest digest at `path`, or "" when absent.
std::string read_manifest_digest(const std::filesystem::path& path);

struct BuildOutcome {
  VectorIndex index;
  bool rebuilt = false;
};

// Loads the index at `path` when its manifest digest matches the inputs,
// otherwise builds and saves it.
BuildOutcome build_or_load_index(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& items,
    Granularity granularity, Embedder& embedder, bool force = false);

// Index inputs for a corpus (id, whitespace-collapsed abstract) or a triple
// list (id "t<position>", linearized triple).
std::vector<std::pair<std::string, std::string>> document_items(const Corpus& corpus);
std::vector<std::pair<std::string, std::string>> triple_items(
    const std::vector<Triple>& triples);

RetrievalResult top_k(const VectorIndex& index, const std::string& query,
                      std::size_t k, Embedder& embedder);

struct ItemRetrieval {
  std::string item_id;
  ItemKind kind = ItemKind::kDeep;
  std::vector<std::size_t> gold_ranks;  // 1-based; 0 when beyond k_max
  double reciprocal_rank = 0.0;         // averaged over golds for multi
  std::map<std::size_t, double> hits;   // K -> hit (averaged for multi)
};

struct RetrieverEval {
  std::size_t k_max = 0;
  std::vector<std::size_t> ks;
  std::vector<ItemRetrieval> items;
  std::size_t deep_count = 0;
  std::size_t multi_count = 0;
  std::map<std::size_t, double> hits_at;    // deep items
  double mrr = 0.0;                         // deep items
  std::map<std::size_t, double> a_hits_at;  // multi items
  double a_mrr = 0.0;                       // multi items
};

// Scores precomputed rankings (document ids, best first), one per item.
// Rankings are cut at k_max. Matching items are ignored.
RetrieverEval score_rankings(const std::vector<BenchmarkItem>& bench,
                             const std::vector<std::vector<std::string>>& rankings,
                             std::size_t k_max, std::vector<std::size_t> ks);

// Queries each deep or multi item's question against a document index.
RetrieverEval eval_retriever(const std::vector<BenchmarkItem>& bench,
                             const VectorIndex& index, Embedder& embedder,
                             std::size_t k_max, std::vector<std::size_t> ks);

Json to_json(const RetrieverEval& eval);

}  // namespace quarry

#endif  // QUARRY_RETRIEVAL_H_
