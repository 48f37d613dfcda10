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

#include "quarry/evalkit.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include "quarry/text.h"

namespace quarry {
namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string_view strip_punct(std::string_view s) {
  while (!s.empty() && is_punct(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_punct(s.back())) s.remove_suffix(1);
  return s;
}

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

}  // namespace

std::string normalize_answer(std::string_view s, const NormalizeOptions& opts) {
  std::string folded = fold_and_collapse(s);
  std::string out(trim(strip_punct(trim(folded))));
  if (!opts.remove_articles) return out;
  std::vector<std::string> kept;
  for (auto& w : split_whitespace(out)) {
    if (!is_article(w)) kept.push_back(std::move(w));
  }
  return join(kept, " ");
}

std::vector<std::string> answer_tokens(std::string_view s, const NormalizeOptions& opts) {
  std::vector<std::string> out;
  for (const auto& w : split_whitespace(normalize_answer(s, opts))) {
    std::string_view t = strip_punct(w);
    if (t.empty() || (opts.remove_articles && is_article(t))) continue;
    out.emplace_back(t);
  }
  return out;
}

double exact_match(const std::vector<std::string>& golds, std::string_view pred,
                   const NormalizeOptions& opts) {
  if (golds.empty()) throw Error("exact_match: no gold answers");
  const std::vector<std::string> p = answer_tokens(pred, opts);
  double sum = 0.0;
  for (const auto& gold : golds) {
    const std::vector<std::string> g = answer_tokens(gold, opts);
    if (g.empty() || g.size() > p.size()) continue;
    if (std::search(p.begin(), p.end(), g.begin(), g.end()) != p.end()) sum += 1.0;
  }
  return sum / static_cast<double>(golds.size());
}

double token_f1(std::string_view gold, std::string_view pred,
                const NormalizeOptions& opts) {
  const std::vector<std::string> g = answer_tokens(gold, opts);
  const std::vector<std::string> p = answer_tokens(pred, opts);
  if (g.empty() || p.empty()) return g == p ? 1.0 : 0.0;
  std::map<std::string, long> counts;
  for (const auto& t : g) ++counts[t];
  long common = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

double f1_score(const std::vector<std::string>& golds, std::string_view pred,
                const NormalizeOptions& opts) {
  if (golds.empty()) throw Error("f1_score: no gold answers");
  double sum = 0.0;
  for (const auto& g : golds) sum += token_f1(g, pred, opts);
  return sum / static_cast<double>(golds.size());
}

double miner_recall_at_k(const std::vector<std::string>& golds,
                         const std::vector<std::string>& completions, std::size_t k) {
  if (k < 1) throw Error("miner_recall_at_k: k must be >= 1");
  if (golds.empty()) throw Error("miner_recall_at_k: no gold answers");
  const std::size_t limit = std::min(k, completions.size());
  std::size_t found = 0;
  for (const auto& g : golds) {
    for (std::size_t i = 0; i < limit; ++i) {
      if (exact_match({g}, completions[i]) == 1.0) {
        ++found;
        break;
      }
    }
  }
  return static_cast<double>(found) / static_cast<double>(golds.size());
}

std::optional<double> parse_judge_score(std::string_view raw) {
  const std::string folded = fold_case(raw);
  const std::size_t key = folded.find("score");
  if (key == std::string::npos) return std::nullopt;
  std::size_t i = folded.find(':', key);
  if (i == std::string::npos) return std::nullopt;
  ++i;
  while (i < folded.size() && std::isspace(static_cast<unsigned char>(folded[i]))) ++i;
  std::size_t j = i;
  while (j < folded.size() &&
         (std::isdigit(static_cast<unsigned char>(folded[j])) || folded[j] == '.')) {
    ++j;
  }
  if (j == i) return std::nullopt;
  std::string num = folded.substr(i, j - i);
  while (!num.empty() && num.back() == '.') num.pop_back();
  char* end = nullptr;
  const double v = std::strtod(num.c_str(), &end);
  if (end != num.c_str() + num.size()) return std::nullopt;
  if (v == 0.0 || v == 0.5 || v == 1.0) return v;
  return std::nullopt;
}

double judge_insight_similarity(const std::string& target,
                                const std::string& generated, Gateway& gateway,
                                const ModelHandle& judge, const PromptLibrary& prompts) {
  if (trim(target).empty() || trim(generated).empty()) {
    throw Error("judge_insight_similarity: empty sentence");
  }
  std::vector<ChatMessage> messages = {
      {"user", prompts.get(PromptKind::kInsightEval).render({target, generated})}};
  std::string raw = gateway.chat(judge, messages).text();
  if (auto v = parse_judge_score(raw)) return *v;
  messages.push_back({"assistant", raw});
  messages.push_back({"user",
                      "Provide only the similarity score in the format "
                      "\"Score: <0, 0.5, or 1>\"."});
  raw = gateway.chat(judge, messages).text();
  if (auto v = parse_judge_score(raw)) return *v;
  throw ParseError("unparseable judge output after retry: " + raw);
}

std::vector<std::string> z_words(std::string_view text) {
  std::set<std::string> words;
  std::string cur;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalpha(u) && u < 128) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      words.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.insert(std::move(cur));
  return {words.begin(), words.end()};
}

std::vector<ZRow> z_scores(const std::vector<LabeledSample>& samples,
                           std::size_t min_count) {
  std::size_t positives = 0;
  for (const auto& s : samples) {
    if (s.label != 0 && s.label != 1) throw Error("z_scores: labels must be 0 or 1");
    positives += static_cast<std::size_t>(s.label);
  }
  if (samples.empty() || positives == 0 || positives == samples.size()) {
    throw Error("degenerate label prior");
  }
  const double p0 = static_cast<double>(positives) / static_cast<double>(samples.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // n, label-1
  for (const auto& s : samples) {
    for (const auto& w : z_words(s.text)) {
      auto& c = counts[w];
      ++c.first;
      c.second += static_cast<std::size_t>(s.label);
    }
  }
  std::vector<ZRow> rows;
  for (const auto& [word, c] : counts) {
    if (c.first < std::max<std::size_t>(min_count, 1)) continue;
    const double n = static_cast<double>(c.first);
    const double p_hat = static_cast<double>(c.second) / n;
    rows.push_back({word, c.first, p_hat, (p_hat - p0) / std::sqrt(p0 * (1.0 - p0) / n)});
  }
  std::sort(rows.begin(), rows.end(), [](const ZRow& a, const ZRow& b) {
    if (a.z != b.z) return a.z > b.z;
    return a.word < b.word;
  });
  return rows;
}

std::vector<LabeledSample> flip_labels(const std::vector<BenchmarkItem>& bench,
                                       const std::vector<RunRecord>& baseline,
                                       const std::vector<RunRecord>& augmented) {
  std::map<std::string, const BenchmarkItem*> items;
  for (const auto& item : bench) items[item.id] = &item;
  std::map<std::string, const RunRecord*> base;
  for (const auto& r : baseline) base[r.item_id] = &r;
  auto correct = [](const RunRecord& r, const BenchmarkItem& item) {
    return r.parsed_answer == (item.pair->label ? "Yes" : "No");
  };
  std::vector<LabeledSample> out;
  for (const auto& aug : augmented) {
    auto it = items.find(aug.item_id);
    if (it == items.end()) throw Error("record references unknown item " + aug.item_id);
    const BenchmarkItem& item = *it->second;
    if (item.kind != ItemKind::kMatching || !item.pair) continue;
    auto b = base.find(aug.item_id);
    if (b == base.end() || !b->second->error.empty() || !aug.error.empty()) continue;
    const bool before = correct(*b->second, item);
    const bool after = correct(aug, item);
    if (before == after) continue;
    out.push_back({render_insight_context(aug.insights), after ? 1 : 0});
  }
  return out;
}

MetricReport aggregate(const std::vector<RunRecord>& records,
                       const std::vector<BenchmarkItem>& bench,
                       const NormalizeOptions& opts) {
  if (records.empty()) throw Error("no records");
  std::map<std::string, const BenchmarkItem*> items;
  for (const auto& item : bench) items[item.id] = &item;
  MetricReport rep;
  rep.pipeline = std::string(pipeline_name(records.front().pipeline));
  rep.k_or_m = records.front().k_or_m;
  double em = 0, f1 = 0, a_em = 0, a_f1 = 0, acc = 0, ctx = 0;
  for (const auto& r : records) {
    if (std::string(pipeline_name(r.pipeline)) != rep.pipeline || r.k_or_m != rep.k_or_m) {
      throw Error("aggregate: records mix configurations");
    }
    auto it = items.find(r.item_id);
    if (it == items.end()) throw Error("record references unknown item " + r.item_id);
    const BenchmarkItem& item = *it->second;
    ItemScore s;
    s.item_id = item.id;
    s.kind = item.kind;
    s.failed = !r.error.empty();
    if (s.failed) ++rep.failed_count;
    if (r.fallback) ++rep.fallback_count;
    ctx += static_cast<double>(r.context_tokens);
    switch (item.kind) {
      case ItemKind::kMatching:
        s.correct = !s.failed && r.parsed_answer == (item.pair->label ? "Yes" : "No");
        s.em = s.f1 = *s.correct ? 1.0 : 0.0;
        acc += s.em;
        ++rep.matching_count;
        break;
      case ItemKind::kDeep:
      case ItemKind::kMulti:
        if (!s.failed) {
          s.em = exact_match(item.golds, r.parsed_answer, opts);
          s.f1 = f1_score(item.golds, r.parsed_answer, opts);
        }
        if (item.kind == ItemKind::kDeep) {
          em += s.em;
          f1 += s.f1;
          ++rep.deep_count;
        } else {
          a_em += s.em;
          a_f1 += s.f1;
          ++rep.multi_count;
        }
        break;
    }
    rep.items.push_back(std::move(s));
  }
  if (rep.deep_count) {
    rep.em = em / static_cast<double>(rep.deep_count);
    rep.f1 = f1 / static_cast<double>(rep.deep_count);
  }
  if (rep.multi_count) {
    rep.a_em = a_em / static_cast<double>(rep.multi_count);
    rep.a_f1 = a_f1 / static_cast<double>(rep.multi_count);
  }
  if (rep.matching_count) rep.accuracy = acc / static_cast<double>(rep.matching_count);
  rep.mean_context_tokens = ctx / static_cast<double>(records.size());
  return rep;
}

std::vector<MetricReport> aggregate_all(const std::vector<RunRecord>& records,
                                        const std::vector<BenchmarkItem>& bench,
                                        const NormalizeOptions& opts) {
  if (records.empty()) throw Error("no records");
  std::map<std::pair<std::string, int>, std::vector<RunRecord>> groups;
  for (const auto& r : records) {
    groups[{std::string(pipeline_name(r.pipeline)), r.k_or_m}].push_back(r);
  }
  std::vector<MetricReport> out;
  for (const auto& [key, group] : groups) out.push_back(aggregate(group, bench, opts));
  return out;
}

}  // namespace quarry
