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

#include "quarry/pipelines.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "quarry/text.h"

namespace quarry {
namespace {

constexpr std::string_view kInsightReprompt =
    "Your previous answer could not be parsed. Return only the list of "
    "dictionaries with the keys \"Insight\" and \"Multi-answer\", with no "
    "additional commentary.";
constexpr std::string_view kMatchingReprompt =
    "Your previous answer could not be parsed. Respond with a JSON object "
    "with the keys \"explanation\" and \"answer\", where \"answer\" is "
    "\"Yes\" or \"No\".";
constexpr std::string_view kArrow = " → ";

class StageError : public Error {
 public:
  StageError(std::string_view stage, const std::string& what)
      : Error(std::string(stage) + ": " + what) {}
};

// Runs `fn`, rethrowing failures tagged with `stage`.
template <typename Fn>
auto staged(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void note_call(RunRecord* record, const Gateway::Result& result) {
  if (record == nullptr) return;
  const CallRecord& c = result.record;
  record->timing_ms += c.latency_ms;
  record->prompt_tokens += c.prompt_tokens;
  record->completion_tokens += c.completion_tokens;
  record->calls.push_back(c);
}

Gateway::Result call(const PipelineStack& stack, const ModelHandle& handle,
                     std::vector<ChatMessage> messages, RunRecord* record,
                     int n = 1, double temperature = -1.0) {
  Gateway::Result r = stack.gateway->chat(handle, std::move(messages), n, temperature);
  note_call(record, r);
  return r;
}

void require_stack(const PipelineStack& stack) {
  if (stack.gateway == nullptr || stack.prompts == nullptr) {
    throw Error("pipeline stack needs a gateway and a prompt library");
  }
}

void require_question(const BenchmarkItem& item) {
  if (item.kind == ItemKind::kMatching) {
    throw Error("item " + item.id + " is a matching item");
  }
}

// Replaces bare Python literals outside string literals.
std::string pythonic_to_json(std::string_view s) {
  std::string out;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < s.size()) {
        out += s[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    auto word_at = [&](std::string_view w) {
      if (s.substr(i, w.size()) != w) return false;
      const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
      const std::size_t j = i + w.size();
      const bool right = j >= s.size() || !std::isalnum(static_cast<unsigned char>(s[j]));
      return left && right;
    };
    if (word_at("True")) {
      out += "true";
      i += 3;
    } else if (word_at("False")) {
      out += "false";
      i += 4;
    } else if (word_at("None")) {
      out += "null";
      i += 3;
    } else {
      out += c;
    }
  }
  return out;
}

std::string strip_terminal_punctuation(std::string_view s) {
  s = trim(s);
  while (!s.empty() && std::string_view(".?!;:,\"'").find(s.back()) !=
                           std::string_view::npos) {
    s = trim(s.substr(0, s.size() - 1));
  }
  return std::string(s);
}

const Json* find_key_ci(const Json& obj, std::initializer_list<std::string_view> names) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string key = fold_case(it.key());
    for (auto n : names) {
      if (key == n) return &it.value();
    }
  }
  return nullptr;
}

std::optional<bool> as_bool(const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = fold_case(trim(v.get<std::string>()));
    if (s == "true" || s == "yes") return true;
    if (s == "false" || s == "no") return false;
  }
  if (v.is_number_integer()) return v.get<long>() != 0;
  return std::nullopt;
}

std::string matching_document(const PipelineStack& stack, const std::string& id) {
  if (stack.corpus == nullptr) throw Error("matching needs a corpus");
  return stack.corpus->at(id).abstract;
}

}  // namespace

std::string_view pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::kVanilla:
      return "vanilla";
    case Pipeline::kRagDoc:
      return "rag_doc";
    case Pipeline::kRagTriple:
      return "rag_triple";
    case Pipeline::kInsight:
      return "insight";
  }
  return "vanilla";
}

Pipeline parse_pipeline(std::string_view name) {
  if (name == "vanilla") return Pipeline::kVanilla;
  if (name == "rag_doc") return Pipeline::kRagDoc;
  if (name == "rag_triple") return Pipeline::kRagTriple;
  if (name == "insight") return Pipeline::kInsight;
  throw ParseError("unknown pipeline \"" + std::string(name) + "\"");
}

std::optional<std::vector<InsightQuery>> parse_insight_list(std::string_view raw) {
  const std::size_t open = raw.find('[');
  const std::size_t close = raw.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    return std::nullopt;
  }
  const Json parsed = Json::parse(pythonic_to_json(raw.substr(open, close - open + 1)),
                                  nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) return std::nullopt;
  std::vector<InsightQuery> out;
  for (const auto& rec : parsed) {
    if (!rec.is_object()) return std::nullopt;
    if (rec.empty()) continue;
    const Json* insight = find_key_ci(rec, {"insight"});
    if (insight == nullptr || !insight->is_string()) return std::nullopt;
    InsightQuery q;
    q.fragment = strip_terminal_punctuation(insight->get<std::string>());
    if (const Json* multi = find_key_ci(rec, {"multi-answer", "multi_answer", "multianswer"})) {
      auto b = as_bool(*multi);
      if (!b) return std::nullopt;
      q.multi_answer = *b;
    }
    if (!q.fragment.empty()) out.push_back(std::move(q));
  }
  return out;
}

std::vector<InsightQuery> identify_insights(const std::string& input_text,
                                            const PipelineStack& stack,
                                            RunRecord* record) {
  require_stack(stack);
  if (trim(input_text).empty()) throw Error("identify_insights: empty input");
  const std::string prompt =
      stack.prompts->get(PromptKind::kIdentifier).render({input_text});
  std::vector<ChatMessage> messages = {{"user", prompt}};
  if (record) record->prompts.push_back(prompt);
  std::string raw = call(stack, stack.identifier, messages, record).text();
  if (record) record->raw_outputs.push_back(raw);
  if (auto parsed = parse_insight_list(raw)) return *parsed;

  messages.push_back({"assistant", raw});
  messages.push_back({"user", std::string(kInsightReprompt)});
  if (record) record->prompts.push_back(std::string(kInsightReprompt));
  raw = call(stack, stack.identifier, messages, record).text();
  if (record) record->raw_outputs.push_back(raw);
  if (auto parsed = parse_insight_list(raw)) return *parsed;
  throw ParseError("unparseable identifier output after retry: " + raw);
}

std::vector<MinedInsight> mine_insights(const std::vector<InsightQuery>& insights,
                                        std::size_t m, const PipelineStack& stack,
                                        RunRecord* record) {
  require_stack(stack);
  std::vector<MinedInsight> out;
  const std::size_t cap = static_cast<std::size_t>(std::max(stack.miner.max_tokens, 0));
  for (std::size_t i = 0; i < std::min(m, insights.size()); ++i) {
    const InsightQuery& q = insights[i];
    const int n = q.multi_answer ? std::max(stack.multi_answer_samples, 1) : 1;
    Gateway::Result r = stack.gateway->complete_insight(stack.miner, q.fragment, n);
    note_call(record, r);
    if (record) {
      record->prompts.push_back(q.fragment);
      for (const auto& t : r.texts) record->raw_outputs.push_back(t);
    }
    MinedInsight mined{q, {}};
    std::size_t used = 0;
    for (const auto& t : r.texts) {
      std::string c = collapse_whitespace(t);
      if (c.empty() ||
          std::find(mined.completions.begin(), mined.completions.end(), c) !=
              mined.completions.end()) {
        continue;
      }
      const std::size_t tokens = count_tokens(c);
      if (used + tokens > cap) {
        if (cap > used) mined.completions.push_back(truncate_tokens(c, cap - used));
        used = cap;
        break;
      }
      used += tokens;
      mined.completions.push_back(std::move(c));
    }
    out.push_back(std::move(mined));
  }
  return out;
}

std::string render_insight_context(const std::vector<MinedInsight>& mined) {
  std::vector<std::string> lines;
  for (const auto& mi : mined) {
    for (const auto& c : mi.completions) {
      lines.push_back(mi.query.fragment + std::string(kArrow) + c);
    }
  }
  return join(lines, "\n");
}

namespace {

long mined_tokens(const std::vector<MinedInsight>& mined) {
  long n = 0;
  for (const auto& mi : mined) {
    for (const auto& c : mi.completions) n += static_cast<long>(count_tokens(c));
  }
  return n;
}

void generate_answer(RunRecord& record, const PipelineStack& stack,
                     const std::string& prompt) {
  staged("generator", [&] {
    record.prompts.push_back(prompt);
    std::string raw = call(stack, stack.generator, {{"user", prompt}}, &record).text();
    record.parsed_answer = std::string(trim(raw));
    record.raw_outputs.push_back(std::move(raw));
  });
}

}  // namespace

RunRecord run_vanilla(const BenchmarkItem& item, const PipelineStack& stack) {
  require_stack(stack);
  require_question(item);
  RunRecord record;
  record.item_id = item.id;
  record.pipeline = Pipeline::kVanilla;
  generate_answer(record, stack,
                  stack.prompts->get(PromptKind::kQa).render({item.question}));
  return record;
}

RunRecord run_rag(const BenchmarkItem& item, const PipelineStack& stack,
                  Granularity granularity, int k) {
  require_stack(stack);
  require_question(item);
  if (k < 1) throw Error("run_rag: k must be >= 1");
  const VectorIndex* index =
      granularity == Granularity::kDocument ? stack.doc_index : stack.triple_index;
  if (index == nullptr || stack.embedder == nullptr) {
    throw Error("run_rag: no " + std::string(granularity_name(granularity)) +
                " index configured");
  }
  if (index->granularity() != granularity) {
    throw Error("run_rag: index granularity does not match the pipeline");
  }
  RunRecord record;
  record.item_id = item.id;
  record.pipeline =
      granularity == Granularity::kDocument ? Pipeline::kRagDoc : Pipeline::kRagTriple;
  record.k_or_m = k;
  const RetrievalResult hits = staged("retrieval", [&] {
    return top_k(*index, item.question, static_cast<std::size_t>(k), *stack.embedder);
  });
  std::vector<std::string> payloads;
  for (const auto& r : hits.ranked) {
    payloads.push_back(collapse_whitespace(index->find(r.id)->payload));
  }
  const std::string context = join(payloads, "\n\n");
  record.context_tokens = static_cast<long>(count_tokens(context));
  generate_answer(record, stack,
                  stack.prompts->get(PromptKind::kAugmentedQa)
                      .render({item.question, context}));
  return record;
}

RunRecord run_insight_rag(const BenchmarkItem& item, const PipelineStack& stack,
                          int m) {
  require_stack(stack);
  require_question(item);
  if (m < 1) throw Error("run_insight_rag: m must be >= 1");
  RunRecord record;
  record.item_id = item.id;
  record.pipeline = Pipeline::kInsight;
  record.k_or_m = m;
  const auto insights =
      staged("identifier", [&] { return identify_insights(item.question, stack, &record); });
  if (insights.empty()) {
    record.fallback = true;
    generate_answer(record, stack,
                    stack.prompts->get(PromptKind::kQa).render({item.question}));
    return record;
  }
  record.insights = staged("miner", [&] {
    return mine_insights(insights, static_cast<std::size_t>(m), stack, &record);
  });
  record.context_tokens = mined_tokens(record.insights);
  generate_answer(record, stack,
                  stack.prompts->get(PromptKind::kAugmentedQa)
                      .render({item.question, render_insight_context(record.insights)}));
  return record;
}

std::optional<std::string> parse_matching_answer(std::string_view raw) {
  auto decide = [](std::string_view v) -> std::optional<std::string> {
    const std::string s = fold_case(strip_terminal_punctuation(v));
    if (s == "yes") return "Yes";
    if (s == "no") return "No";
    return std::nullopt;
  };
  const std::size_t open = raw.find('{');
  const std::size_t close = raw.rfind('}');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    const Json j = Json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      if (const Json* a = find_key_ci(j, {"answer"}); a && a->is_string()) {
        return decide(a->get<std::string>());
      }
    }
  }
  // Malformed JSON: fall back to the first "answer": "<value>" pair.
  const std::string folded = fold_case(raw);
  const std::size_t key = folded.find("\"answer\"");
  if (key == std::string::npos) return std::nullopt;
  const std::size_t colon = folded.find(':', key);
  if (colon == std::string::npos) return std::nullopt;
  const std::size_t q1 = folded.find('"', colon);
  if (q1 == std::string::npos) return std::nullopt;
  const std::size_t q2 = folded.find('"', q1 + 1);
  if (q2 == std::string::npos) return std::nullopt;
  return decide(std::string_view(folded).substr(q1 + 1, q2 - q1 - 1));
}

RunRecord run_matching(const BenchmarkItem& item, MatchingMode mode,
                       const PipelineStack& stack, int m) {
  require_stack(stack);
  if (item.kind != ItemKind::kMatching || !item.pair) {
    throw Error("item " + item.id + " is not a matching item");
  }
  const std::string paper_a = matching_document(stack, item.pair->doc_a);
  std::string paper_b = matching_document(stack, item.pair->doc_b);
  RunRecord record;
  record.item_id = item.id;
  std::string prompt;
  switch (mode) {
    case MatchingMode::kVanilla:
      record.pipeline = Pipeline::kVanilla;
      prompt = stack.prompts->get(PromptKind::kMatching).render({paper_a, paper_b});
      break;
    case MatchingMode::kRag1: {
      record.pipeline = Pipeline::kRagDoc;
      record.k_or_m = 1;
      if (stack.doc_index == nullptr || stack.embedder == nullptr) {
        throw Error("matching rag1 needs a document index");
      }
      const RetrievalResult hits = staged("retrieval", [&] {
        return top_k(*stack.doc_index, paper_a + "\n\n" + paper_b, 3, *stack.embedder);
      });
      for (const auto& r : hits.ranked) {
        if (r.id == item.pair->doc_a || r.id == item.pair->doc_b) continue;
        const std::string payload =
            collapse_whitespace(stack.doc_index->find(r.id)->payload);
        record.context_tokens = static_cast<long>(count_tokens(payload));
        paper_b += "\n\nContext: " + payload;
        break;
      }
      prompt = stack.prompts->get(PromptKind::kMatching).render({paper_a, paper_b});
      break;
    }
    case MatchingMode::kInsight: {
      record.pipeline = Pipeline::kInsight;
      record.k_or_m = m;
      if (m < 1) throw Error("run_matching: m must be >= 1");
      const std::string task =
          stack.prompts->get(PromptKind::kMatching).render({paper_a, paper_b});
      const auto insights =
          staged("identifier", [&] { return identify_insights(task, stack, &record); });
      record.insights = staged("miner", [&] {
        return mine_insights(insights, static_cast<std::size_t>(m), stack, &record);
      });
      record.fallback = insights.empty();
      record.context_tokens = mined_tokens(record.insights);
      prompt = stack.prompts->get(PromptKind::kAugmentedMatching)
                   .render({paper_a, paper_b, render_insight_context(record.insights)});
      break;
    }
  }
  staged("generator", [&] {
    std::vector<ChatMessage> messages = {{"user", prompt}};
    record.prompts.push_back(prompt);
    std::string raw = call(stack, stack.generator, messages, &record).text();
    record.raw_outputs.push_back(raw);
    if (auto answer = parse_matching_answer(raw)) {
      record.parsed_answer = *answer;
      return;
    }
    messages.push_back({"assistant", raw});
    messages.push_back({"user", std::string(kMatchingReprompt)});
    record.prompts.push_back(std::string(kMatchingReprompt));
    raw = call(stack, stack.generator, messages, &record).text();
    record.raw_outputs.push_back(raw);
    if (auto answer = parse_matching_answer(raw)) {
      record.parsed_answer = *answer;
      return;
    }
    throw ParseError("reply has no \"answer\" field after retry: " + raw);
  });
  return record;
}

RunRecord run_item(const BenchmarkItem& item, Pipeline pipeline, int k_or_m,
                   const PipelineStack& stack) {
  try {
    if (item.kind == ItemKind::kMatching) {
      switch (pipeline) {
        case Pipeline::kVanilla:
          return run_matching(item, MatchingMode::kVanilla, stack);
        case Pipeline::kRagDoc:
          return run_matching(item, MatchingMode::kRag1, stack);
        case Pipeline::kInsight:
          return run_matching(item, MatchingMode::kInsight, stack, k_or_m);
        case Pipeline::kRagTriple:
          throw Error("triple RAG is not defined for matching items");
      }
    }
    switch (pipeline) {
      case Pipeline::kVanilla:
        return run_vanilla(item, stack);
      case Pipeline::kRagDoc:
        return run_rag(item, stack, Granularity::kDocument, k_or_m);
      case Pipeline::kRagTriple:
        return run_rag(item, stack, Granularity::kTriple, k_or_m);
      case Pipeline::kInsight:
        return run_insight_rag(item, stack, k_or_m);
    }
    throw Error("unknown pipeline");
  } catch (const StageError& e) {
    RunRecord record;
    record.item_id = item.id;
    record.pipeline = pipeline;
    record.k_or_m = k_or_m;
    record.error = e.what();
    return record;
  }
}

std::vector<RunRecord> run_batch(const std::vector<BenchmarkItem>& items,
                                 Pipeline pipeline, int k_or_m,
                                 const PipelineStack& stack, std::size_t workers) {
  std::vector<RunRecord> out(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    out[i] = run_item(items[i], pipeline, k_or_m, stack);
  });
  return out;
}

bool replay_matches(const RunRecord& record, const PipelineStack& stack) {
  require_stack(stack);
  for (const auto& c : record.calls) {
    const ModelHandle* handle = nullptr;
    switch (c.role) {
      case Role::kIdentifier:
        handle = &stack.identifier;
        break;
      case Role::kMiner:
        handle = &stack.miner;
        break;
      case Role::kGenerator:
        handle = &stack.generator;
        break;
      default:
        return false;
    }
    const double temperature = c.n > 1 ? kSamplingTemperature : -1.0;
    if (stack.gateway->chat(*handle, c.messages, c.n, temperature).texts != c.outputs) {
      return false;
    }
  }
  return true;
}

Json to_json(const RunRecord& r) {
  Json insights = Json::array();
  for (const auto& mi : r.insights) {
    insights.push_back({{"fragment", mi.query.fragment},
                        {"multi_answer", mi.query.multi_answer},
                        {"completions", mi.completions}});
  }
  Json calls = Json::array();
  for (const auto& c : r.calls) calls.push_back(to_json(c));
  Json j = {{"item_id", r.item_id},
            {"pipeline", pipeline_name(r.pipeline)},
            {"k_or_m", r.k_or_m},
            {"prompts", r.prompts},
            {"raw_outputs", r.raw_outputs},
            {"parsed_answer", r.parsed_answer},
            {"insights", std::move(insights)},
            {"fallback", r.fallback},
            {"context_tokens", r.context_tokens},
            {"timing_ms", r.timing_ms},
            {"usage",
             {{"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens}}},
            {"calls", std::move(calls)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

RunRecord run_record_from_json(const Json& j) {
  RunRecord r;
  r.item_id = j.at("item_id").get<std::string>();
  r.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
  r.k_or_m = j.value("k_or_m", 0);
  r.prompts = j.value("prompts", std::vector<std::string>());
  r.raw_outputs = j.value("raw_outputs", std::vector<std::string>());
  r.parsed_answer = j.value("parsed_answer", std::string());
  if (auto it = j.find("insights"); it != j.end()) {
    for (const auto& mi : *it) {
      r.insights.push_back({{mi.at("fragment").get<std::string>(),
                             mi.value("multi_answer", false)},
                            mi.value("completions", std::vector<std::string>())});
    }
  }
  r.fallback = j.value("fallback", false);
  r.context_tokens = j.value("context_tokens", 0L);
  r.timing_ms = j.value("timing_ms", 0.0);
  if (auto u = j.find("usage"); u != j.end()) {
    r.prompt_tokens = u->value("prompt_tokens", 0L);
    r.completion_tokens = u->value("completion_tokens", 0L);
  }
  if (auto it = j.find("calls"); it != j.end()) {
    for (const auto& c : *it) r.calls.push_back(call_record_from_json(c));
  }
  r.error = j.value("error", std::string());
  return r;
}

std::string serialize_run_records(const std::vector<RunRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

std::vector<RunRecord> load_run_records(const std::filesystem::path& path) {
  std::vector<RunRecord> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    try {
      out.push_back(run_record_from_json(rec));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line) + ": " +
                       e.what());
    }
  });
  return out;
}

}  // namespace quarry
