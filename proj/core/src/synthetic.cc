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

#include "quarry/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "quarry/text.h"

namespace quarry {
namespace {

// Consonant-vowel syllables that do not occur in the filler vocabulary.
const std::vector<std::string> kOnsets = {"z", "x", "q", "v", "k", "j"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "y"};

const std::vector<std::string> kFiller = {
    "results", "suggest", "that", "careful", "design", "matters", "for",
    "robust", "speed", "across", "settings", "and", "tasks", "in",
    "practice", "trials", "show", "steady", "gains", "over", "strong",
    "baselines", "while", "remaining", "efficient", "simple", "analysis",
    "reveals", "several", "trends", "which", "we", "discuss", "further",
    "testing", "covers", "many", "domains", "with", "clear", "margins"};

const std::vector<std::string> kRelations = {"uses", "improves", "extends",
                                             "evaluates", "requires", "outperforms"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

 private:
  std::mt19937_64 gen_;
};

// Unique made-up word for `n`: four syllables encode n in base 36 with a
// fixed "ro" prefix so names never collide with each other or the filler.
std::string coined(std::size_t n) {
  std::string w = "ro";
  for (int i = 0; i < 4; ++i) {
    const std::size_t digit = n % 36;
    n /= 36;
    w += kOnsets[digit / 6] + kVowels[digit % 6];
  }
  return w;
}

std::string doc_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "D%04zu", i);
  return buf;
}

std::string filler(Rng& rng, std::size_t tokens) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < tokens; ++i) words.push_back(kFiller[rng.below(kFiller.size())]);
  std::string s = join(words, " ");
  if (!s.empty()) s += ".";
  return s;
}

std::string triple_line(const Triple& t) {
  return t.subject + " | " + t.relation + " | " + t.object;
}

}  // namespace

SyntheticWorld make_synthetic_world(const SyntheticOptions& opts) {
  Rng rng(opts.seed);
  std::size_t next_name = 1;
  auto name = [&] { return coined(next_name++); };

  const std::size_t grouped =
      std::min(opts.documents, opts.multi_groups * opts.multi_group_size);
  std::vector<std::string> group_subject(opts.multi_groups);
  for (auto& s : group_subject) s = name();

  // Ring-linked documents share a topic word so lexical matchers see the link.
  std::vector<std::string> topic(opts.documents);
  for (std::size_t i = 0; i + 1 < opts.documents; i += 4) topic[i] = topic[i + 1] = name();

  std::vector<Document> docs;
  std::vector<Triple> triples;
  std::vector<std::vector<std::string>> lines_per_doc;
  for (std::size_t i = 0; i < opts.documents; ++i) {
    Document d;
    d.id = doc_id(i + 1);
    d.title = "Study " + std::to_string(i + 1);
    std::vector<Triple> planted;
    const std::string subject = name();
    const std::string object = name();
    const std::string& relation = kRelations[rng.below(kRelations.size())];
    planted.push_back({subject, relation, object, d.id});
    std::vector<std::string> sentences = {subject + " " + relation + " " + object + "."};
    if (i < grouped && opts.multi_group_size >= 2) {
      const std::string& shared = group_subject[i / opts.multi_group_size];
      const std::string part = name();
      planted.push_back({shared, "includes", part, d.id});
      sentences.push_back(shared + " includes " + part + ".");
    }
    if (!topic[i].empty()) sentences.push_back("see also " + topic[i] + ".");
    planted.push_back({"we", "propose", "a new approach", d.id});

    std::size_t used = 0;
    for (const auto& s : sentences) used += count_tokens(s);
    const std::size_t overhead = used + 5;
    const std::size_t rest =
        opts.tokens_per_document > overhead ? opts.tokens_per_document - overhead : 0;
    const std::size_t lead = rest / 2;
    d.abstract = collapse_whitespace("we propose a new approach. " + filler(rng, lead) +
                                     " " + join(sentences, " ") + " " +
                                     filler(rng, rest - lead));

    std::vector<std::string> lines;
    for (const auto& t : planted) lines.push_back(triple_line(t));
    lines_per_doc.push_back(std::move(lines));
    triples.insert(triples.end(), planted.begin(), planted.end());
    docs.push_back(std::move(d));
  }

  // Neighbors: documents of one group cite each other, plus a sparse ring.
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i < grouped && opts.multi_group_size >= 2) {
      const std::size_t g = i / opts.multi_group_size;
      for (std::size_t j = g * opts.multi_group_size;
           j < std::min(grouped, (g + 1) * opts.multi_group_size); ++j) {
        if (j != i) docs[i].neighbors.insert(docs[j].id);
      }
    }
    if (!topic[i].empty() && i % 4 == 0) docs[i].neighbors.insert(docs[i + 1].id);
  }

  SyntheticWorld world;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    world.extractor_kb.add(docs[i].abstract, join(lines_per_doc[i], "\n"));
  }
  world.corpus = Corpus::from_documents(std::move(docs));
  world.triples = std::move(triples);

  // Matching pairs alternate cited and random uncited pairs.
  const auto& all = world.corpus.documents();
  std::vector<std::string> ids;
  for (const auto& [id, d] : all) ids.push_back(id);
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t attempts = 0;
       world.pairs.size() < opts.matching_pairs && attempts < opts.matching_pairs * 50 &&
       ids.size() > 1;
       ++attempts) {
    const bool want_positive = world.pairs.size() % 2 == 0;
    const std::string& a = ids[rng.below(ids.size())];
    const Document& da = all.at(a);
    std::string b;
    if (want_positive) {
      if (da.neighbors.empty()) continue;
      auto it = da.neighbors.begin();
      std::advance(it, static_cast<long>(rng.below(da.neighbors.size())));
      b = *it;
    } else {
      b = ids[rng.below(ids.size())];
      if (b == a || da.neighbors.count(b)) continue;
    }
    auto key = std::minmax(a, b);
    if (!seen.insert({key.first, key.second}).second) continue;
    world.pairs.push_back({a, b, want_positive});
  }
  return world;
}

MockKB oracle_identifier_kb(const std::vector<BenchmarkItem>& items) {
  MockKB kb;
  for (const auto& item : items) {
    if (item.kind == ItemKind::kMatching || item.source_triples.empty()) continue;
    const SourceTriple& t = item.source_triples.front();
    Json reply = Json::array();
    reply.push_back({{"Insight", t.subject + " " + t.relation},
                     {"Multi-answer", item.kind == ItemKind::kMulti}});
    kb.add(item.question, reply.dump());
  }
  return kb;
}

MockKB oracle_miner_kb(const std::vector<BenchmarkItem>& items) {
  MockKB kb;
  for (const auto& item : items) {
    if (item.kind == ItemKind::kMatching || item.source_triples.empty()) continue;
    const SourceTriple& t = item.source_triples.front();
    kb.add(t.subject + " " + t.relation, item.golds);
  }
  return kb;
}

}  // namespace quarry
