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

#include "quarry/benchbuild.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include <spdlog/spdlog.h>

#include "quarry/gateway.h"
#include "quarry/prompts.h"
#include "quarry/text.h"

namespace quarry {
namespace {

std::string numbered_id(std::string_view prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", n);
  return std::string(prefix) + "-" + buf;
}

template <typename T>
void push_distinct(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

constexpr std::string_view kLeakFollowUp =
    "The question must not contain the answer \"{}\". Rewrite it. Return only "
    "the question.";

}  // namespace

std::string_view item_kind_name(ItemKind kind) {
  switch (kind) {
    case ItemKind::kDeep:
      return "deep";
    case ItemKind::kMulti:
      return "multi";
    case ItemKind::kMatching:
      return "matching";
  }
  return "deep";
}

ItemKind parse_item_kind(std::string_view name) {
  if (name == "deep") return ItemKind::kDeep;
  if (name == "multi") return ItemKind::kMulti;
  if (name == "matching") return ItemKind::kMatching;
  throw ParseError("unknown item kind \"" + std::string(name) + "\"");
}

std::vector<BenchmarkItem> filter_deep_insight(const TripleIndex& index,
                                               const Corpus& corpus) {
  std::vector<BenchmarkItem> out;
  for (const auto& [key, entries] : index.by_subject_relation()) {
    if (entries.size() != 1) continue;
    const TripleEntry& e = entries.front();
    const Document* doc = corpus.find(e.doc_id);
    if (doc == nullptr) continue;
    if (count_occurrences_ci(doc->abstract, key.first) != 1 ||
        count_occurrences_ci(doc->abstract, e.object) != 1) {
      continue;
    }
    BenchmarkItem item;
    item.id = numbered_id("deep", out.size() + 1);
    item.kind = ItemKind::kDeep;
    item.golds = {e.object};
    item.source_docs = {e.doc_id};
    item.source_triples = {{key.first, key.second, e.object}};
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<BenchmarkItem> filter_multi_source(const TripleIndex& index) {
  std::vector<BenchmarkItem> out;
  for (const auto& [key, entries] : index.by_subject_relation()) {
    std::vector<std::string> objects;
    std::vector<std::string> docs;
    for (const auto& e : entries) {
      push_distinct(objects, e.object);
      push_distinct(docs, e.doc_id);
    }
    if (objects.size() < 2 || docs.size() < 2) continue;
    BenchmarkItem item;
    item.id = numbered_id("multi", out.size() + 1);
    item.kind = ItemKind::kMulti;
    item.golds = std::move(objects);
    item.source_docs = std::move(docs);
    for (const auto& e : entries) {
      item.source_triples.push_back({key.first, key.second, e.object});
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<BenchmarkItem> build_matching_bench(
    const std::vector<MatchingItem>& pairs) {
  std::vector<BenchmarkItem> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    BenchmarkItem item;
    item.id = numbered_id("match", out.size() + 1);
    item.kind = ItemKind::kMatching;
    item.source_docs = {p.doc_a, p.doc_b};
    item.pair = p;
    out.push_back(std::move(item));
  }
  return out;
}

bool question_leaks_gold(const std::string& question,
                         const std::vector<std::string>& golds) {
  return std::any_of(golds.begin(), golds.end(), [&](const std::string& g) {
    return !trim(g).empty() && contains_ci(question, trim(g));
  });
}

std::vector<BenchmarkItem> generate_questions(
    const std::vector<BenchmarkItem>& items, Gateway& gateway,
    const ModelHandle& qgen, const PromptLibrary& prompts,
    QuestionGenStats* stats) {
  enum class Outcome { kOk, kRegenerated, kLeak, kError };
  std::vector<std::optional<BenchmarkItem>> results(items.size());
  std::vector<Outcome> outcomes(items.size(), Outcome::kOk);

  const PromptTemplate& tmpl = prompts.get(PromptKind::kQuestionGen);
  parallel_for(items.size(), static_cast<std::size_t>(qgen.parallelism_cap),
               [&](std::size_t i) {
    const BenchmarkItem& item = items[i];
    if (item.kind == ItemKind::kMatching) {
      results[i] = item;
      return;
    }
    if (item.source_triples.empty()) {
      throw Error("item " + item.id + " has no source triples");
    }
    const SourceTriple& t = item.source_triples.front();
    const char* answer_type =
        item.kind == ItemKind::kMulti ? "multiple answers" : "single answer";
    std::vector<ChatMessage> messages = {
        {"user", tmpl.render({t.subject, t.relation, answer_type})}};
    try {
      std::string question(trim(gateway.chat(qgen, messages).text()));
      if (question_leaks_gold(question, item.golds)) {
        messages.push_back({"assistant", question});
        std::string follow(kLeakFollowUp);
        follow.replace(follow.find("{}"), 2, join(item.golds, "; "));
        messages.push_back({"user", std::move(follow)});
        question = std::string(trim(gateway.chat(qgen, messages).text()));
        if (question_leaks_gold(question, item.golds) || question.empty()) {
          outcomes[i] = Outcome::kLeak;
          return;
        }
        outcomes[i] = Outcome::kRegenerated;
      }
      if (question.empty()) {
        outcomes[i] = Outcome::kError;
        return;
      }
      BenchmarkItem filled = item;
      filled.question = std::move(question);
      results[i] = std::move(filled);
    } catch (const TransportError& e) {
      spdlog::warn("question generation for {} failed: {}", item.id, e.what());
      outcomes[i] = Outcome::kError;
    }
  });

  QuestionGenStats local;
  std::vector<BenchmarkItem> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    switch (outcomes[i]) {
      case Outcome::kLeak:
        ++local.regenerated;
        ++local.dropped_leak;
        break;
      case Outcome::kError:
        ++local.dropped_error;
        break;
      case Outcome::kRegenerated:
        ++local.regenerated;
        [[fallthrough]];
      case Outcome::kOk:
        if (items[i].kind != ItemKind::kMatching) ++local.generated;
        out.push_back(std::move(*results[i]));
        break;
    }
  }
  if (stats != nullptr) *stats = local;
  return out;
}

void validate_item(const BenchmarkItem& item) {
  auto fail = [&](const std::string& why) {
    throw Error("benchmark item " + (item.id.empty() ? "<no id>" : item.id) +
                ": " + why);
  };
  if (item.id.empty()) fail("empty id");
  std::set<std::string> docs(item.source_docs.begin(), item.source_docs.end());
  switch (item.kind) {
    case ItemKind::kDeep:
      if (item.golds.size() != 1) fail("deep item needs exactly 1 gold");
      if (item.source_docs.size() != 1) fail("deep item needs exactly 1 source doc");
      if (item.pair) fail("deep item must not carry a pair");
      break;
    case ItemKind::kMulti:
      if (item.golds.size() < 2) fail("multi item needs at least 2 golds");
      if (docs.size() < 2) fail("multi item needs at least 2 distinct source docs");
      if (item.pair) fail("multi item must not carry a pair");
      break;
    case ItemKind::kMatching:
      if (!item.pair) fail("matching item needs a pair");
      if (!item.golds.empty()) fail("matching item must have no golds");
      break;
  }
  if (item.kind != ItemKind::kMatching &&
      question_leaks_gold(item.question, item.golds)) {
    fail("question contains a gold answer");
  }
}

Json to_json(const BenchmarkItem& item) {
  Json triples = Json::array();
  for (const auto& t : item.source_triples) {
    triples.push_back({t.subject, t.relation, t.object});
  }
  Json j = {{"id", item.id},
            {"kind", item_kind_name(item.kind)},
            {"question", item.question},
            {"golds", item.golds},
            {"source_docs", item.source_docs},
            {"source_triples", std::move(triples)},
            {"pair", nullptr}};
  if (item.pair) j["pair"] = to_json(*item.pair);
  return j;
}

BenchmarkItem benchmark_item_from_json(const Json& j) {
  BenchmarkItem item;
  item.id = j.at("id").get<std::string>();
  item.kind = parse_item_kind(j.at("kind").get<std::string>());
  item.question = j.value("question", std::string());
  item.golds = j.value("golds", std::vector<std::string>());
  item.source_docs = j.value("source_docs", std::vector<std::string>());
  if (auto it = j.find("source_triples"); it != j.end() && it->is_array()) {
    for (const auto& t : *it) {
      if (!t.is_array() || t.size() != 3) {
        throw ParseError("item " + item.id + ": source triple must be [s, r, o]");
      }
      item.source_triples.push_back({t[0].get<std::string>(),
                                     t[1].get<std::string>(),
                                     t[2].get<std::string>()});
    }
  }
  if (auto it = j.find("pair"); it != j.end() && !it->is_null()) {
    item.pair = MatchingItem{it->at("doc_a").get<std::string>(),
                             it->at("doc_b").get<std::string>(),
                             it->at("label").get<bool>()};
  }
  return item;
}

std::string serialize_benchmark(const std::vector<BenchmarkItem>& items) {
  std::set<std::string> ids;
  std::string out;
  for (const auto& item : items) {
    validate_item(item);
    if (!ids.insert(item.id).second) {
      throw Error("benchmark item " + item.id + ": duplicate id");
    }
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

std::size_t emit_benchmark(const std::vector<BenchmarkItem>& items,
                           const std::filesystem::path& path) {
  write_file_atomic(path, serialize_benchmark(items));
  return items.size();
}

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path) {
  std::vector<BenchmarkItem> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    try {
      out.push_back(benchmark_item_from_json(rec));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line) + ": " +
                       e.what());
    }
  });
  return out;
}

DatasetStats dataset_stats(const std::vector<BenchmarkItem>& items) {
  DatasetStats s;
  for (const auto& item : items) {
    switch (item.kind) {
      case ItemKind::kDeep:
        ++s.deep;
        break;
      case ItemKind::kMulti:
        ++s.multi;
        break;
      case ItemKind::kMatching:
        ++s.matching;
        break;
    }
  }
  return s;
}

namespace {

std::string tsv_field(std::string_view s) {
  std::string out;
  for (char c : s) out += (c == '\t' || c == '\n' || c == '\r') ? ' ' : c;
  return out;
}

}  // namespace

std::string review_tsv(const std::vector<BenchmarkItem>& items) {
  std::string out = "id\tdecision\tkind\tquestion\tgolds\n";
  for (const auto& item : items) {
    out += tsv_field(item.id) + "\taccept\t" +
           std::string(item_kind_name(item.kind)) + "\t" +
           tsv_field(item.question) + "\t" + tsv_field(join(item.golds, "; ")) +
           "\n";
  }
  return out;
}

std::vector<BenchmarkItem> apply_review(const std::vector<BenchmarkItem>& items,
                                        const std::filesystem::path& review) {
  std::ifstream in(review);
  if (!in) throw Error("cannot open " + review.string());
  std::set<std::string> known;
  for (const auto& item : items) known.insert(item.id);
  std::set<std::string> rejected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && starts_with(line, "id\t")) continue;
    if (trim(line).empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 =
        t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    const std::string id(trim(line.substr(0, t1)));
    const std::string decision = fold_case(trim(
        t1 == std::string::npos ? std::string_view()
                                : std::string_view(line).substr(
                                      t1 + 1, t2 == std::string::npos
                                                  ? std::string::npos
                                                  : t2 - t1 - 1)));
    const std::string where = review.string() + ": line " + std::to_string(line_no);
    if (known.count(id) == 0) throw ParseError(where + ": unknown item " + id);
    if (decision == "reject") {
      rejected.insert(id);
    } else if (decision != "accept") {
      throw ParseError(where + ": decision must be accept or reject");
    }
  }
  std::vector<BenchmarkItem> out;
  for (const auto& item : items) {
    if (rejected.count(item.id) == 0) out.push_back(item);
  }
  return out;
}

}  // namespace quarry
