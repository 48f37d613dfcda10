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

#include "quarry/triples.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "quarry/gateway.h"
#include "quarry/prompts.h"
#include "quarry/text.h"

namespace quarry {
namespace {

const std::set<std::string> kArticles = {"a", "an", "the"};

std::string triple_key(const Triple& t) {
  std::string k;
  for (const auto* f : {&t.subject, &t.relation, &t.object, &t.doc_id}) {
    k += *f;
    k += '\x1f';
  }
  return k;
}

// Strips list markers such as "1.", "2)", "-", "*", "•".
std::string_view strip_list_marker(std::string_view line) {
  line = trim(line);
  if (starts_with(line, "- ") || starts_with(line, "* ")) return trim(line.substr(2));
  if (starts_with(line, "•")) return trim(line.substr(std::string_view("•").size()));
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') &&
      line[i + 1] == ' ') {
    return trim(line.substr(i + 2));
  }
  return line;
}

std::string_view strip_brackets(std::string_view s) {
  s = trim(s);
  while (s.size() >= 2) {
    const char a = s.front();
    const char b = s.back();
    if ((a == '(' && b == ')') || (a == '<' && b == '>') ||
        (a == '[' && b == ']') || (a == '"' && b == '"')) {
      s = trim(s.substr(1, s.size() - 2));
    } else {
      break;
    }
  }
  return s;
}

std::string apply_folding(std::string_view s, const RelationRules& rules) {
  std::string out = collapse_whitespace(s);
  if (rules.case_fold) out = fold_case(out);
  if (rules.strip_articles) {
    std::vector<std::string> kept;
    for (auto& w : split_whitespace(out)) {
      if (kArticles.count(fold_case(w)) == 0) kept.push_back(std::move(w));
    }
    out = join(kept, " ");
  }
  return out;
}

}  // namespace

std::string linearize(const Triple& t) {
  return t.subject + " " + t.relation + " " + t.object;
}

void validate_rules(RelationRules& rules) {
  std::vector<std::pair<std::string, std::string>> normalized;
  for (const auto& [pattern, canonical] : rules.canonical_map) {
    std::string p = apply_folding(pattern, rules);
    std::string c = apply_folding(canonical, rules);
    if (p.empty() || c.empty()) {
      throw Error("relation rule \"" + pattern + "\" -> \"" + canonical +
                  "\" normalizes to an empty string");
    }
    normalized.emplace_back(std::move(p), std::move(c));
  }
  for (const auto& [p, c] : normalized) {
    for (const auto& [p2, c2] : normalized) {
      if (c == p2 && p2 != c2) {
        throw Error("relation rules chain: \"" + p + "\" -> \"" + c +
                    "\" is itself rewritten to \"" + c2 + "\"");
      }
    }
  }
  rules.canonical_map = std::move(normalized);
}

RelationRules load_relation_rules(const std::filesystem::path& path,
                                  RelationRules base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  base.canonical_map.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": expected pattern<TAB>canonical");
    }
    base.canonical_map.emplace_back(std::string(trim(line.substr(0, tab))),
                                    std::string(trim(line.substr(tab + 1))));
  }
  validate_rules(base);
  return base;
}

ExtractionResult parse_extractor_output(std::string_view text,
                                        const std::string& doc_id) {
  ExtractionResult result;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = strip_brackets(strip_list_marker(text.substr(pos, end - pos)));
    pos = end + 1;
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t bar = line.find('|', start);
      fields.emplace_back(collapse_whitespace(strip_brackets(
          line.substr(start, bar == std::string_view::npos ? line.size() - start
                                                           : bar - start))));
      if (bar == std::string_view::npos) break;
      start = bar + 1;
    }
    if (fields.size() != 3 ||
        std::any_of(fields.begin(), fields.end(),
                    [](const std::string& f) { return f.empty(); })) {
      ++result.skipped_lines;
      continue;
    }
    Triple t{fields[0], fields[1], fields[2], doc_id};
    if (seen.insert(triple_key(t)).second) result.triples.push_back(std::move(t));
  }
  return result;
}

ExtractionResult extract_triples(const Document& doc, Gateway& gateway,
                                 const ModelHandle& extractor,
                                 const PromptLibrary& prompts) {
  if (trim(doc.abstract).empty()) {
    throw Error("document " + doc.id + " has an empty abstract");
  }
  const std::string prompt = prompts.get(PromptKind::kExtract).render({doc.abstract});
  std::string reply;
  try {
    reply = gateway.ask(extractor, prompt).text();
  } catch (const std::exception& e) {
    throw Error("triple extraction failed for document " + doc.id + ": " + e.what());
  }
  ExtractionResult result = parse_extractor_output(reply, doc.id);
  if (result.skipped_lines > 0) {
    spdlog::debug("{}: skipped {} unparseable extractor line(s)", doc.id,
                  result.skipped_lines);
  }
  return result;
}

std::string normalize_relation(std::string_view relation,
                               const RelationRules& rules) {
  std::string r = apply_folding(relation, rules);
  for (const auto& [pattern, canonical] : rules.canonical_map) {
    if (r == pattern) r = canonical;
  }
  return r;
}

std::vector<Triple> normalize_relations(const std::vector<Triple>& triples,
                                        const RelationRules& rules) {
  std::vector<Triple> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : triples) {
    Triple n{fold_and_collapse(t.subject), normalize_relation(t.relation, rules),
             fold_and_collapse(t.object), t.doc_id};
    if (n.subject.empty() || n.relation.empty() || n.object.empty()) continue;
    if (seen.insert(triple_key(n)).second) out.push_back(std::move(n));
  }
  return out;
}

std::set<std::string> default_stoplist() {
  return {"we",   "i",    "you",      "he",     "she",    "it",    "they",
          "us",   "them", "this",     "that",   "these",  "those", "our",
          "their", "its", "one",      "paper",  "this paper", "the paper",
          "work", "this work", "method", "approach", "our approach",
          "our method", "study", "this study", "authors", "the authors",
          "results", "system", "our system"};
}

std::set<std::string> load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = fold_and_collapse(line);
    if (!w.empty() && w.front() != '#') out.insert(std::move(w));
  }
  return out;
}

std::vector<Triple> filter_noisy(const std::vector<Triple>& triples,
                                 const std::set<std::string>& stoplist) {
  std::vector<Triple> out;
  for (const auto& t : triples) {
    if (stoplist.count(fold_and_collapse(t.subject)) ||
        stoplist.count(fold_and_collapse(t.object))) {
      continue;
    }
    out.push_back(t);
  }
  return out;
}

const std::vector<TripleEntry>* TripleIndex::find(const Key& key) const {
  auto it = by_sr_.find(key);
  return it == by_sr_.end() ? nullptr : &it->second;
}

TripleIndex index_triples(const std::vector<Triple>& triples) {
  TripleIndex index;
  for (const auto& t : triples) {
    index.by_sr_[{t.subject, t.relation}].push_back({t.object, t.doc_id});
    ++index.triple_count_;
  }
  for (auto& [key, entries] : index.by_sr_) {
    std::sort(entries.begin(), entries.end(),
              [](const TripleEntry& a, const TripleEntry& b) {
                return std::tie(a.doc_id, a.object) < std::tie(b.doc_id, b.object);
              });
  }
  return index;
}

Json to_json(const Triple& t) {
  return {{"s", t.subject}, {"r", t.relation}, {"o", t.object}, {"doc", t.doc_id}};
}

Triple triple_from_json(const Json& j) {
  return {j.at("s").get<std::string>(), j.at("r").get<std::string>(),
          j.at("o").get<std::string>(), j.at("doc").get<std::string>()};
}

std::vector<Triple> load_triples(const std::filesystem::path& path) {
  std::vector<Triple> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    try {
      out.push_back(triple_from_json(rec));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line) + ": " +
                       e.what());
    }
  });
  return out;
}

std::string serialize_triples(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

}  // namespace quarry
