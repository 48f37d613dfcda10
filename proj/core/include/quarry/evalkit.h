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

// Metrics and analyses: exact match, token F1, miner recall, judged insight
// similarity, lexical z-scores and run aggregation.

#ifndef QUARRY_EVALKIT_H_
#define QUARRY_EVALKIT_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quarry/benchbuild.h"
#include "quarry/gateway.h"
#include "quarry/pipelines.h"
#include "quarry/prompts.h"

namespace quarry {

struct NormalizeOptions {
  bool remove_articles = false;
};

// Case-folds, collapses whitespace and strips leading and trailing
// punctuation.
std::string normalize_answer(std::string_view s, const NormalizeOptions& opts = {});

// Normalized tokens, each stripped of surrounding punctuation; empty tokens
// are dropped.
std::vector<std::string> answer_tokens(std::string_view s,
                                       const NormalizeOptions& opts = {});

// 1 when the gold's token sequence occurs contiguously in the prediction's
// tokens, else 0; averaged over golds. Empty golds score 0.
double exact_match(const std::vector<std::string>& golds, std::string_view pred,
                   const NormalizeOptions& opts = {});

double token_f1(std::string_view gold, std::string_view pred,
                const NormalizeOptions& opts = {});
// Mean token F1 over golds.
double f1_score(const std::vector<std::string>& golds, std::string_view pred,
                const NormalizeOptions& opts = {});

// Fraction of golds found (exact_match) in any of the first k completions.
double miner_recall_at_k(const std::vector<std::string>& golds,
                         const std::vector<std::string>& completions, std::size_t k);

// Reads "Score: <0|0.5|1>"; nullopt otherwise.
std::optional<double> parse_judge_score(std::string_view raw);

// Renders the similarity prompt, parses the score and reprompts once.
// Throws ParseError when both replies are unparseable.
double judge_insight_similarity(const std::string& target,
                                const std::string& generated, Gateway& gateway,
                                const ModelHandle& judge, const PromptLibrary& prompts);

struct LabeledSample {
  std::string text;
  int label = 0;  // 0 or 1
};

struct ZRow {
  std::string word;
  std::size_t n = 0;
  double p_hat = 0.0;
  double z = 0.0;
  bool operator==(const ZRow&) const = default;
};

// Distinct lowercase alphabetic words of `text`.
std::vector<std::string> z_words(std::string_view text);

// One-proportion z-statistic per word present in at least `min_count`
// samples, sorted by z descending then word. Throws Error "degenerate label
// prior" when every sample has the same label.
std::vector<ZRow> z_scores(const std::vector<LabeledSample>& samples,
                           std::size_t min_count = 3);

// Label 1 when augmentation turned a wrong matching prediction right, 0 for
// the reverse; unchanged or failed items are skipped. The text is the
// augmented record's insight context.
std::vector<LabeledSample> flip_labels(const std::vector<BenchmarkItem>& bench,
                                       const std::vector<RunRecord>& baseline,
                                       const std::vector<RunRecord>& augmented);

struct ItemScore {
  std::string item_id;
  ItemKind kind = ItemKind::kDeep;
  double em = 0.0;
  double f1 = 0.0;
  std::optional<bool> correct;  // matching items
  bool failed = false;
};

struct MetricReport {
  std::string pipeline;
  int k_or_m = 0;
  std::vector<ItemScore> items;
  std::optional<double> em;        // deep items
  std::optional<double> f1;        // deep items
  std::optional<double> a_em;      // multi items
  std::optional<double> a_f1;      // multi items
  std::optional<double> accuracy;  // matching items
  std::size_t deep_count = 0;
  std::size_t multi_count = 0;
  std::size_t matching_count = 0;
  std::size_t failed_count = 0;
  std::size_t fallback_count = 0;
  double mean_context_tokens = 0.0;
};

// Scores records of one (pipeline, k_or_m) configuration. Throws Error "no
// records" for an empty list, for unknown items and for mixed
// configurations. Failed records score 0.
MetricReport aggregate(const std::vector<RunRecord>& records,
                       const std::vector<BenchmarkItem>& bench,
                       const NormalizeOptions& opts = {});

// Groups records by (pipeline, k_or_m) and aggregates each group, ordered
// by pipeline name then k_or_m.
std::vector<MetricReport> aggregate_all(const std::vector<RunRecord>& records,
                                        const std::vector<BenchmarkItem>& bench,
                                        const NormalizeOptions& opts = {});

// Includes per-item scores; round-trips through metric_report_from_json.
Json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const Json& j);

// Tab-separated table, one row per report.
std::string report_table(const std::vector<MetricReport>& reports);
// Per-item scores, one JSON record per line.
std::string item_scores_jsonl(const std::vector<MetricReport>& reports);
// Line plot of `metric` against k_or_m with one series per pipeline.
std::string sweep_plot_svg(const std::vector<MetricReport>& reports,
                           const std::string& metric);

// Writes report.tsv, scores.jsonl and one <metric>.svg per metric with data
// under `dir`. Returns the written paths.
std::vector<std::filesystem::path> sweep_report(const std::vector<MetricReport>& reports,
                                                const std::filesystem::path& dir);

}  // namespace quarry

#endif  // QUARRY_EVALKIT_H_
