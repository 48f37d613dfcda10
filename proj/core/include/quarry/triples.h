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

// Knowledge triples: model-based extraction, relation normalization,
// noise filtering and the (subject, relation) index the benchmark filters
// query.

#ifndef QUARRY_TRIPLES_H_
#define QUARRY_TRIPLES_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "quarry/corpus.h"
#include "quarry/io.h"

namespace quarry {

class Gateway;
class PromptLibrary;
struct ModelHandle;

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
  std::string doc_id;

  auto operator<=>(const Triple&) const = default;
};

// Linearized "subject relation object" form used for retrieval payloads.
std::string linearize(const Triple& t);

struct RelationRules {
  bool case_fold = true;
  bool strip_articles = true;
  // Whole-relation rewrites, applied in order after folding and article
  // stripping.
  std::vector<std::pair<std::string, std::string>> canonical_map;
};

// Parses `pattern<TAB>canonical` lines; blank lines and lines starting with
// '#' are skipped. Patterns and canonicals are normalized with the rules'
// folding options. Throws Error for rule chains (a canonical that is also a
// pattern), which would make normalization order-dependent.
RelationRules load_relation_rules(const std::filesystem::path& path,
                                  RelationRules base = {});
void validate_rules(RelationRules& rules);

struct ExtractionResult {
  std::vector<Triple> triples;
  std::size_t skipped_lines = 0;
};

// Parses the extractor wire format (one `subject | relation | object` per
// line). Bullets, numbering and surrounding brackets are tolerated; lines
// without exactly three non-empty fields are skipped and counted. Exact
// duplicates are removed, keeping first occurrence.
ExtractionResult parse_extractor_output(std::string_view text,
                                        const std::string& doc_id);

// Renders the extraction prompt for `doc`, calls the extractor and parses
// the reply. Transport failures surface as Error carrying the doc id.
ExtractionResult extract_triples(const Document& doc, Gateway& gateway,
                                 const ModelHandle& extractor,
                                 const PromptLibrary& prompts);

std::string normalize_relation(std::string_view relation,
                               const RelationRules& rules);

// Case-folds and whitespace-collapses subjects and objects, normalizes
// relations per `rules`, drops triples with an empty field and removes
// post-normalization duplicates. Order of first occurrence is preserved.
std::vector<Triple> normalize_relations(const std::vector<Triple>& triples,
                                        const RelationRules& rules);

// Noise filter: drops triples whose subject or object (after folding) is in
// the stop-list, e.g. "<we, show, x>".
std::set<std::string> default_stoplist();
std::set<std::string> load_stoplist(const std::filesystem::path& path);
std::vector<Triple> filter_noisy(const std::vector<Triple>& triples,
                                 const std::set<std::string>& stoplist);

struct TripleEntry {
  std::string object;
  std::string doc_id;
  auto operator<=>(const TripleEntry&) const = default;
};

// Immutable (subject, relation) -> [(object, doc)] grouping. Entries per key
// are ordered by (doc_id, object).
class TripleIndex {
 public:
  using Key = std::pair<std::string, std::string>;

  const std::map<Key, std::vector<TripleEntry>>& by_subject_relation() const {
    return by_sr_;
  }
  std::size_t triple_count() const { return triple_count_; }
  const std::vector<TripleEntry>* find(const Key& key) const;

 private:
  friend TripleIndex index_triples(const std::vector<Triple>& triples);
  std::map<Key, std::vector<TripleEntry>> by_sr_;
  std::size_t triple_count_ = 0;
};

TripleIndex index_triples(const std::vector<Triple>& triples);

Json to_json(const Triple& t);
Triple triple_from_json(const Json& j);
std::vector<Triple> load_triples(const std::filesystem::path& path);
std::string serialize_triples(const std::vector<Triple>& triples);

}  // namespace quarry

#endif  // QUARRY_TRIPLES_H_
