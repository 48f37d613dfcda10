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

// Answer-producing pipelines: vanilla, document RAG, triple RAG and
// Insight-RAG for question items, and the three matching-task modes.

#ifndef QUARRY_PIPELINES_H_
#define QUARRY_PIPELINES_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quarry/benchbuild.h"
#include "quarry/corpus.h"
#include "quarry/embedding.h"
#include "quarry/gateway.h"
#include "quarry/prompts.h"
#include "quarry/retrieval.h"

namespace quarry {

struct InsightQuery {
  std::string fragment;  // no terminal punctuation
  bool multi_answer = false;
  bool operator==(const InsightQuery&) const = default;
};

struct MinedInsight {
  InsightQuery query;
  std::vector<std::string> completions;  // distinct, capped jointly
  bool operator==(const MinedInsight&) const = default;
};

enum class Pipeline { kVanilla, kRagDoc, kRagTriple, kInsight };

std::string_view pipeline_name(Pipeline p);
Pipeline parse_pipeline(std::string_view name);

struct RunRecord {
  std::string item_id;
  Pipeline pipeline = Pipeline::kVanilla;
  int k_or_m = 0;
  std::vector<std::string> prompts;
  std::vector<std::string> raw_outputs;
  std::string parsed_answer;
  std::vector<MinedInsight> insights;
  bool fallback = false;        // Insight-RAG answered without insights
  long context_tokens = 0;      // tokens of retrieved or mined context
  double timing_ms = 0.0;       // sum of backend latencies
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::vector<CallRecord> calls;
  std::string error;            // "<stage>: <message>" when the item failed
};

Json to_json(const RunRecord& record);
RunRecord run_record_from_json(const Json& j);
std::string serialize_run_records(const std::vector<RunRecord>& records);
std::vector<RunRecord> load_run_records(const std::filesystem::path& path);

// Everything a pipeline may need. Indexes and the corpus are only required
// by the pipelines that use them.
struct PipelineStack {
  Gateway* gateway = nullptr;
  const PromptLibrary* prompts = nullptr;
  ModelHandle identifier = ModelHandle::defaults_for(Role::kIdentifier);
  ModelHandle miner = ModelHandle::defaults_for(Role::kMiner);
  ModelHandle generator = ModelHandle::defaults_for(Role::kGenerator);
  const Corpus* corpus = nullptr;
  const VectorIndex* doc_index = nullptr;
  const VectorIndex* triple_index = nullptr;
  Embedder* embedder = nullptr;
  int multi_answer_samples = 10;
};

// Parses the identifier's bracketed list of {"Insight", "Multi-answer"}
// records. Python-style True/False are accepted; empty records are skipped;
// terminal punctuation is stripped from fragments. nullopt when no list
// can be parsed.
std::optional<std::vector<InsightQuery>> parse_insight_list(std::string_view raw);

// Renders the identifier prompt over `input_text` and parses the reply,
// reprompting once on a parse failure. Throws ParseError carrying the raw
// output when the second reply does not parse either. Calls are appended
// to `record` when given.
std::vector<InsightQuery> identify_insights(const std::string& input_text,
                                            const PipelineStack& stack,
                                            RunRecord* record = nullptr);

// Mines the first `m` insights. Multi-answer insights draw
// stack.multi_answer_samples samples, others one. Distinct completions are
// kept in order and jointly capped at the miner's max_tokens.
std::vector<MinedInsight> mine_insights(const std::vector<InsightQuery>& insights,
                                        std::size_t m, const PipelineStack& stack,
                                        RunRecord* record = nullptr);

// "fragment → completion" lines.
std::string render_insight_context(const std::vector<MinedInsight>& mined);

RunRecord run_vanilla(const BenchmarkItem& item, const PipelineStack& stack);
RunRecord run_rag(const BenchmarkItem& item, const PipelineStack& stack,
                  Granularity granularity, int k);
RunRecord run_insight_rag(const BenchmarkItem& item, const PipelineStack& stack,
                          int m);

enum class MatchingMode { kVanilla, kRag1, kInsight };

// Yes/No from the structured reply's "answer" field, case-insensitively.
std::optional<std::string> parse_matching_answer(std::string_view raw);

// `m` is the number of insights used in insight mode.
RunRecord run_matching(const BenchmarkItem& item, MatchingMode mode,
                       const PipelineStack& stack, int m = 1);

// Dispatches by item kind: matching items map vanilla/rag_doc/insight to
// the matching modes. Stage errors are captured in record.error.
RunRecord run_item(const BenchmarkItem& item, Pipeline pipeline, int k_or_m,
                   const PipelineStack& stack);

// Runs every item with up to `workers` items in flight. Output order
// follows `items`.
std::vector<RunRecord> run_batch(const std::vector<BenchmarkItem>& items,
                                 Pipeline pipeline, int k_or_m,
                                 const PipelineStack& stack, std::size_t workers);

// Re-issues every stored call through the handles of `stack` and reports
// whether all outputs are reproduced.
bool replay_matches(const RunRecord& record, const PipelineStack& stack);

}  // namespace quarry

#endif  // QUARRY_PIPELINES_H_
