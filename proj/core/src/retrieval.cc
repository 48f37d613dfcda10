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

#include "quarry/retrieval.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "quarry/text.h"

namespace quarry {
namespace {

constexpr std::string_view kMagic = "QUARRYVX1";

bool rank_before(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, std::string_view s) {
  put<std::uint64_t>(out, s.size());
  out.append(s);
}

class Reader {
 public:
  Reader(std::string_view data, std::string path) : data_(data), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ParseError(path_ + ": truncated index file");
  }
  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return path.string() + ".manifest";
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(manifest_path(path));
  if (!in) return kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::string_view granularity_name(Granularity g) {
  return g == Granularity::kDocument ? "document" : "triple";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "document" || name == "doc") return Granularity::kDocument;
  if (name == "triple") return Granularity::kTriple;
  throw ParseError("unknown granularity \"" + std::string(name) + "\"");
}

VectorIndex::VectorIndex(Granularity granularity, std::size_t dim,
                         std::string embedder_id)
    : granularity_(granularity), dim_(dim), embedder_id_(std::move(embedder_id)) {}

VectorIndex VectorIndex::build(
    const std::vector<std::pair<std::string, std::string>>& items,
    Granularity granularity, Embedder& embedder, std::size_t parallelism) {
  std::set<std::string> ids;
  for (const auto& [id, text] : items) {
    if (!ids.insert(id).second) throw Error("duplicate index id \"" + id + "\"");
  }
  std::vector<std::string> texts;
  texts.reserve(items.size());
  for (const auto& item : items) texts.push_back(item.second);
  std::vector<Vector> vecs = embed(texts, embedder, parallelism);
  VectorIndex index(granularity, vecs.empty() ? 0 : vecs.front().size(),
                    embedder.id());
  for (std::size_t i = 0; i < items.size(); ++i) {
    index.add({items[i].first, std::move(vecs[i]), items[i].second});
  }
  index.digest_ = index_inputs_digest(items, granularity, embedder.id());
  return index;
}

void VectorIndex::add(IndexEntry entry) {
  if (entry.vector.size() != dim_) {
    throw Error("index entry \"" + entry.id + "\" has dim " +
                std::to_string(entry.vector.size()) + ", index dim is " +
                std::to_string(dim_));
  }
  double sq = 0.0;
  for (float x : entry.vector) sq += static_cast<double>(x) * x;
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
    throw Error("index entry \"" + entry.id + "\" is not unit-normalized");
  }
  if (!by_id_.emplace(entry.id, entries_.size()).second) {
    throw Error("duplicate index id \"" + entry.id + "\"");
  }
  entries_.push_back(std::move(entry));
}

const IndexEntry* VectorIndex::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

std::vector<Ranked> VectorIndex::search(const Vector& unit_query,
                                        std::size_t k) const {
  if (unit_query.size() != dim_) {
    throw Error("query dim " + std::to_string(unit_query.size()) +
                " does not match index dim " + std::to_string(dim_));
  }
  std::vector<Ranked> scored;
  scored.reserve(entries_.size());
  for (const auto& e : entries_) {
    double dot = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      dot += static_cast<double>(e.vector[i]) * unit_query[i];
    }
    scored.push_back({e.id, dot});
  }
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + n, scored.end(), rank_before);
  scored.resize(n);
  return scored;
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::string out(kMagic);
  put<std::uint32_t>(out, granularity_ == Granularity::kDocument ? 0 : 1);
  put<std::uint64_t>(out, dim_);
  put<std::uint64_t>(out, entries_.size());
  put_string(out, embedder_id_);
  put_string(out, digest_);
  for (const auto& e : entries_) {
    put_string(out, e.id);
    put_string(out, e.payload);
    out.append(reinterpret_cast<const char*>(e.vector.data()),
               e.vector.size() * sizeof(float));
  }
  write_file_atomic(path, out);
  std::ostringstream manifest;
  manifest << "embedder=" << embedder_id_ << "\n"
           << "dim=" << dim_ << "\n"
           << "granularity=" << granularity_name(granularity_) << "\n"
           << "entries=" << entries_.size() << "\n"
           << "digest=" << digest_ << "\n"
           << "file_sha256=" << sha256_hex(out) << "\n";
  write_file_atomic(manifest_path(path), manifest.str());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader r(data, path.string());
  if (r.take(kMagic.size()) != kMagic) {
    throw ParseError(path.string() + ": not an index file");
  }
  const auto gran = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  VectorIndex index(gran == 0 ? Granularity::kDocument : Granularity::kTriple, dim,
                    r.get_string());
  index.digest_ = r.get_string();
  for (std::uint64_t i = 0; i < n; ++i) {
    IndexEntry e;
    e.id = r.get_string();
    e.payload = r.get_string();
    e.vector.resize(dim);
    std::string_view raw = r.take(dim * sizeof(float));
    std::memcpy(e.vector.data(), raw.data(), raw.size());
    index.add(std::move(e));
  }
  if (!r.done()) throw ParseError(path.string() + ": trailing bytes in index file");
  auto manifest = read_manifest(path);
  if (!manifest.empty()) {
    if (manifest["file_sha256"] != sha256_hex(data) ||
        manifest["digest"] != index.digest_ ||
        manifest["embedder"] != index.embedder_id_) {
      throw ParseError(path.string() + ": index does not match its manifest");
    }
  }
  return index;
}

bool VectorIndex::operator==(const VectorIndex& other) const {
  return granularity_ == other.granularity_ && dim_ == other.dim_ &&
         embedder_id_ == other.embedder_id_ && digest_ == other.digest_ &&
         entries_ == other.entries_;
}

std::string index_inputs_digest(
    const std::vector<std::pair<std::string, std::string>>& items,
    Granularity granularity, const std::string& embedder_id) {
  Digest d;
  d.add("index-v1").add(granularity_name(granularity)).add(embedder_id);
  for (const auto& [id, text] : items) d.add(id).add(text);
  return d.hex();
}

std::string read_manifest_digest(const std::filesystem::path& path) {
  auto kv = read_manifest(path);
  auto it = kv.find("digest");
  return it == kv.end() ? std::string() : it->second;
}

BuildOutcome build_or_load_index(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& items,
    Granularity granularity, Embedder& embedder, bool force) {
  const std::string digest = index_inputs_digest(items, granularity, embedder.id());
  if (!force && std::filesystem::exists(path) && read_manifest_digest(path) == digest) {
    return {VectorIndex::load(path), false};
  }
  BuildOutcome out{VectorIndex::build(items, granularity, embedder), true};
  out.index.save(path);
  return out;
}

std::vector<std::pair<std::string, std::string>> document_items(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& [id, doc] : corpus.documents()) {
    items.emplace_back(id, collapse_whitespace(doc.abstract));
  }
  return items;
}

std::vector<std::pair<std::string, std::string>> triple_items(
    const std::vector<Triple>& triples) {
  std::vector<std::pair<std::string, std::string>> items;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    items.emplace_back("t" + std::to_string(i), linearize(triples[i]));
  }
  return items;
}

RetrievalResult top_k(const VectorIndex& index, const std::string& query,
                      std::size_t k, Embedder& embedder) {
  if (k < 1) throw Error("top_k: k must be >= 1");
  RetrievalResult result;
  result.query = query;
  if (index.size() == 0) return result;
  std::vector<Vector> q = embed({query}, embedder, 1);
  result.ranked = index.search(q.front(), k);
  return result;
}

RetrieverEval score_rankings(const std::vector<BenchmarkItem>& bench,
                             const std::vector<std::vector<std::string>>& rankings,
                             std::size_t k_max, std::vector<std::size_t> ks) {
  if (bench.size() != rankings.size()) {
    throw Error("score_rankings: " + std::to_string(rankings.size()) +
                " rankings for " + std::to_string(bench.size()) + " items");
  }
  if (k_max < 1) throw Error("score_rankings: k_max must be >= 1");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  RetrieverEval ev;
  ev.k_max = k_max;
  ev.ks = ks;
  for (std::size_t k : ks) {
    ev.hits_at[k] = 0.0;
    ev.a_hits_at[k] = 0.0;
  }
  for (std::size_t i = 0; i < bench.size(); ++i) {
    const BenchmarkItem& item = bench[i];
    if (item.kind == ItemKind::kMatching) continue;
    std::map<std::string, std::size_t> rank_of;
    const auto& ranking = rankings[i];
    for (std::size_t r = 0; r < std::min(k_max, ranking.size()); ++r) {
      rank_of.emplace(ranking[r], r + 1);
    }
    std::vector<std::string> golds;
    for (const auto& d : item.source_docs) {
      if (std::find(golds.begin(), golds.end(), d) == golds.end()) golds.push_back(d);
    }
    ItemRetrieval ir;
    ir.item_id = item.id;
    ir.kind = item.kind;
    for (std::size_t k : ks) ir.hits[k] = 0.0;
    for (const auto& d : golds) {
      auto it = rank_of.find(d);
      const std::size_t rank = it == rank_of.end() ? 0 : it->second;
      ir.gold_ranks.push_back(rank);
      if (rank > 0) ir.reciprocal_rank += 1.0 / static_cast<double>(rank);
      for (std::size_t k : ks) {
        if (rank > 0 && rank <= k) ir.hits[k] += 1.0;
      }
    }
    if (!golds.empty()) {
      const double g = static_cast<double>(golds.size());
      ir.reciprocal_rank /= g;
      for (auto& [k, h] : ir.hits) h /= g;
    }
    const bool deep = item.kind == ItemKind::kDeep;
    (deep ? ev.mrr : ev.a_mrr) += ir.reciprocal_rank;
    for (const auto& [k, h] : ir.hits) (deep ? ev.hits_at : ev.a_hits_at)[k] += h;
    ++(deep ? ev.deep_count : ev.multi_count);
    ev.items.push_back(std::move(ir));
  }
  if (ev.deep_count > 0) {
    ev.mrr /= static_cast<double>(ev.deep_count);
    for (auto& [k, h] : ev.hits_at) h /= static_cast<double>(ev.deep_count);
  }
  if (ev.multi_count > 0) {
    ev.a_mrr /= static_cast<double>(ev.multi_count);
    for (auto& [k, h] : ev.a_hits_at) h /= static_cast<double>(ev.multi_count);
  }
  return ev;
}

RetrieverEval eval_retriever(const std::vector<BenchmarkItem>& bench,
                             const VectorIndex& index, Embedder& embedder,
                             std::size_t k_max, std::vector<std::size_t> ks) {
  if (index.granularity() != Granularity::kDocument) {
    throw Error("retriever evaluation needs a document index");
  }
  std::vector<std::string> queries;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < bench.size(); ++i) {
    if (bench[i].kind == ItemKind::kMatching) continue;
    queries.push_back(bench[i].question);
    positions.push_back(i);
  }
  std::vector<std::vector<std::string>> rankings(bench.size());
  std::vector<Vector> qv = embed(queries, embedder);
  for (std::size_t j = 0; j < qv.size(); ++j) {
    for (const auto& r : index.search(qv[j], k_max)) {
      rankings[positions[j]].push_back(r.id);
    }
  }
  return score_rankings(bench, rankings, k_max, std::move(ks));
}

Json to_json(const RetrieverEval& ev) {
  auto keyed = [](const std::map<std::size_t, double>& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
  };
  Json items = Json::array();
  for (const auto& ir : ev.items) {
    items.push_back({{"item_id", ir.item_id},
                     {"kind", item_kind_name(ir.kind)},
                     {"gold_ranks", ir.gold_ranks},
                     {"reciprocal_rank", ir.reciprocal_rank},
                     {"hits", keyed(ir.hits)}});
  }
  return {{"k_max", ev.k_max},
          {"deep_count", ev.deep_count},
          {"multi_count", ev.multi_count},
          {"hits_at", keyed(ev.hits_at)},
          {"mrr", ev.mrr},
          {"a_hits_at", keyed(ev.a_hits_at)},
          {"a_mrr", ev.a_mrr},
          {"items", std::move(items)}};
}

}  // namespace quarry
