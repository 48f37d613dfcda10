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

// Document corpora, paper-pair matching labels and graph sampling.
//
// A corpus file holds one record per line:
//   {"id": str, "title": str, "abstract": str, "neighbors": [str]}
// A matching file holds one record per line:
//   {"doc_a": str, "doc_b": str, "label": bool}
//
// Neighbor edges are undirected. Dangling neighbor ids (ids not present in
// the corpus) and self-loops are dropped at ingest and counted.

#ifndef QUARRY_CORPUS_H_
#define QUARRY_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "quarry/io.h"

namespace quarry {

struct Document {
  std::string id;
  std::string title;
  std::string abstract;
  std::set<std::string> neighbors;
  std::size_t token_count = 0;

  bool operator==(const Document&) const = default;
};

struct MatchingItem {
  std::string doc_a;
  std::string doc_b;
  bool label = false;

  bool operator==(const MatchingItem&) const = default;
};

// Immutable, id-indexed document collection. Safe to share across readers.
class Corpus {
 public:
  Corpus() = default;

  // Builds a corpus from documents. Duplicate ids and empty abstracts are
  // rejected; dangling and self edges are removed and the remaining edges
  // made symmetric.
  static Corpus from_documents(std::vector<Document> docs,
                               std::string source_path = {});

  const Document* find(const std::string& id) const;
  // Throws Error for unknown ids.
  const Document& at(const std::string& id) const;
  bool contains(const std::string& id) const { return docs_.count(id) > 0; }

  // Documents in ascending id order.
  const std::map<std::string, Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t dropped_edges() const { return dropped_edges_; }
  const std::string& source_path() const { return source_path_; }
  double mean_token_count() const;

  // Copy restricted to `ids`; edges leaving the subset are dropped.
  Corpus subset(const std::vector<std::string>& ids) const;

  // Copy with positive matching pairs added as undirected edges. Pairs with
  // unknown ids are ignored.
  Corpus with_matching_edges(const std::vector<MatchingItem>& pairs) const;

  bool operator==(const Corpus& other) const {
    return docs_ == other.docs_ && edge_count_ == other.edge_count_;
  }

 private:
  std::map<std::string, Document> docs_;
  std::size_t edge_count_ = 0;
  std::size_t dropped_edges_ = 0;
  std::string source_path_;
};

// Loads a line-delimited corpus file. Throws ParseError naming the line
// number for malformed records and Error("duplicate id <id>") for repeated
// ids.
Corpus ingest_corpus(const std::filesystem::path& path);

std::string serialize_corpus(const Corpus& corpus);

// Breadth-first sample over the corpus neighbor graph. Seeds are visited in
// the given order, neighbors in ascending id order. When the frontier
// empties before `n` ids are collected the walk restarts from the smallest
// unvisited id. Returns exactly min(n, corpus.size()) ids in visitation
// order.
std::vector<std::string> bfs_sample(const Corpus& corpus,
                                    const std::vector<std::string>& seeds,
                                    std::size_t n);

struct MatchingLoad {
  std::vector<MatchingItem> pairs;
  std::size_t dropped = 0;  // unresolvable ids or doc_a == doc_b
};

MatchingLoad load_matching_pairs(const std::filesystem::path& path,
                                 const Corpus& corpus);

Json to_json(const MatchingItem& item);

}  // namespace quarry

#endif  // QUARRY_CORPUS_H_
