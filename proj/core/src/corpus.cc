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

#include "quarry/corpus.h"

#include <deque>
#include <unordered_set>
#include <utility>

#include <spdlog/spdlog.h>

#include "quarry/text.h"

namespace quarry {
namespace {

std::string required_string(const Json& rec, const char* key,
                            const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw ParseError(where + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus Corpus::from_documents(std::vector<Document> docs,
                              std::string source_path) {
  Corpus c;
  c.source_path_ = std::move(source_path);
  for (auto& d : docs) {
    if (d.id.empty()) throw Error("document with empty id");
    if (trim(d.abstract).empty()) {
      throw Error("document " + d.id + " has an empty abstract");
    }
    d.token_count = count_tokens(d.abstract);
    std::string id = d.id;
    if (!c.docs_.emplace(id, std::move(d)).second) {
      throw Error("duplicate id " + id);
    }
  }
  // Drop dangling edges and self-loops, then symmetrize.
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto& [id, doc] : c.docs_) {
    for (const auto& nb : doc.neighbors) {
      if (nb == id || c.docs_.count(nb) == 0) {
        ++c.dropped_edges_;
      } else {
        edges.emplace_back(id, nb);
      }
    }
    doc.neighbors.clear();
  }
  for (const auto& [a, b] : edges) {
    c.docs_[a].neighbors.insert(b);
    c.docs_[b].neighbors.insert(a);
  }
  std::size_t degree_sum = 0;
  for (const auto& [id, doc] : c.docs_) degree_sum += doc.neighbors.size();
  c.edge_count_ = degree_sum / 2;
  if (c.dropped_edges_ > 0) {
    spdlog::warn("{}: dropped {} dangling or self neighbor edge(s)",
                 c.source_path_.empty() ? "corpus" : c.source_path_,
                 c.dropped_edges_);
  }
  return c;
}

const Document* Corpus::find(const std::string& id) const {
  auto it = docs_.find(id);
  return it == docs_.end() ? nullptr : &it->second;
}

const Document& Corpus::at(const std::string& id) const {
  const Document* d = find(id);
  if (d == nullptr) throw Error("unknown document id " + id);
  return *d;
}

double Corpus::mean_token_count() const {
  if (docs_.empty()) return 0.0;
  double total = 0;
  for (const auto& [id, doc] : docs_) total += static_cast<double>(doc.token_count);
  return total / static_cast<double>(docs_.size());
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
  std::unordered_set<std::string> keep(ids.begin(), ids.end());
  std::vector<Document> docs;
  for (const auto& id : ids) {
    Document d = at(id);
    std::set<std::string> nbs;
    for (const auto& nb : d.neighbors) {
      if (keep.count(nb)) nbs.insert(nb);
    }
    d.neighbors = std::move(nbs);
    docs.push_back(std::move(d));
  }
  return from_documents(std::move(docs), source_path_);
}

Corpus Corpus::with_matching_edges(
    const std::vector<MatchingItem>& pairs) const {
  std::vector<Document> docs;
  docs.reserve(docs_.size());
  std::map<std::string, std::set<std::string>> extra;
  for (const auto& p : pairs) {
    if (!p.label || !contains(p.doc_a) || !contains(p.doc_b)) continue;
    if (p.doc_a == p.doc_b) continue;
    extra[p.doc_a].insert(p.doc_b);
  }
  for (const auto& [id, doc] : docs_) {
    Document d = doc;
    if (auto it = extra.find(id); it != extra.end()) {
      d.neighbors.insert(it->second.begin(), it->second.end());
    }
    docs.push_back(std::move(d));
  }
  return from_documents(std::move(docs), source_path_);
}

Corpus ingest_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    const std::string where = path.string() + ": line " + std::to_string(line);
    if (!rec.is_object()) throw ParseError(where + ": record is not an object");
    Document d;
    d.id = required_string(rec, "id", where);
    d.title = rec.value("title", std::string());
    d.abstract = required_string(rec, "abstract", where);
    if (d.id.empty()) throw ParseError(where + ": empty id");
    if (trim(d.abstract).empty()) throw ParseError(where + ": empty abstract");
    if (auto it = rec.find("neighbors"); it != rec.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(where + ": neighbors must be a list");
      for (const auto& nb : *it) {
        if (!nb.is_string()) throw ParseError(where + ": non-string neighbor");
        d.neighbors.insert(nb.get<std::string>());
      }
    }
    if (!seen.insert(d.id).second) throw Error("duplicate id " + d.id);
    docs.push_back(std::move(d));
  });
  return Corpus::from_documents(std::move(docs), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& [id, doc] : corpus.documents()) {
    Json rec = {{"id", doc.id},
                {"title", doc.title},
                {"abstract", doc.abstract},
                {"neighbors", Json(std::vector<std::string>(
                                  doc.neighbors.begin(), doc.neighbors.end()))}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::string> bfs_sample(const Corpus& corpus,
                                    const std::vector<std::string>& seeds,
                                    std::size_t n) {
  for (const auto& s : seeds) {
    if (!corpus.contains(s)) throw Error("unknown seed id " + s);
  }
  std::vector<std::string> out;
  const std::size_t target = std::min(n, corpus.size());
  if (target == 0) return out;
  if (seeds.empty()) throw Error("bfs_sample needs at least one seed");

  std::unordered_set<std::string> visited;
  std::deque<std::string> frontier;
  auto enqueue = [&](const std::string& id) {
    if (visited.insert(id).second) frontier.push_back(id);
  };
  for (const auto& s : seeds) enqueue(s);

  auto restart = corpus.documents().begin();
  while (out.size() < target) {
    if (frontier.empty()) {
      while (visited.count(restart->first)) ++restart;
      enqueue(restart->first);
    }
    std::string id = std::move(frontier.front());
    frontier.pop_front();
    // std::set iterates in ascending id order.
    for (const auto& nb : corpus.at(id).neighbors) enqueue(nb);
    out.push_back(std::move(id));
  }
  return out;
}

MatchingLoad load_matching_pairs(const std::filesystem::path& path,
                                 const Corpus& corpus) {
  MatchingLoad result;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    const std::string where = path.string() + ": line " + std::to_string(line);
    MatchingItem item;
    item.doc_a = required_string(rec, "doc_a", where);
    item.doc_b = required_string(rec, "doc_b", where);
    auto it = rec.find("label");
    if (it == rec.end()) throw ParseError(where + ": missing label field");
    if (it->is_boolean()) {
      item.label = it->get<bool>();
    } else if (it->is_number_integer() &&
               (it->get<int>() == 0 || it->get<int>() == 1)) {
      item.label = it->get<int>() == 1;
    } else {
      throw ParseError(where + ": label must be a boolean");
    }
    if (item.doc_a == item.doc_b || !corpus.contains(item.doc_a) ||
        !corpus.contains(item.doc_b)) {
      ++result.dropped;
      return;
    }
    result.pairs.push_back(std::move(item));
  });
  if (result.dropped > 0) {
    spdlog::warn("{}: dropped {} unresolvable matching pair(s)", path.string(),
                 result.dropped);
  }
  return result;
}

Json to_json(const MatchingItem& item) {
  return {{"doc_a", item.doc_a}, {"doc_b", item.doc_b}, {"label", item.label}};
}

}  // namespace quarry
