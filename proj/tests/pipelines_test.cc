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

#include <gtest/gtest.h>

#include "quarry/embedding.h"
#include "quarry/mock_backends.h"
#include "quarry/pipelines.h"
#include "quarry/prompts.h"
#include "test_support.h"

namespace quarry {
namespace {

using testing::ScriptedBackend;
using testing::TempDir;

TEST(InsightListTest, ParsesPythonStyleRecords) {
  const auto parsed = parse_insight_list(
      "Here you go:\n[\n {\"Insight\": \"Person X was born in.\", \"Multi-answer\": False},\n"
      " {\"insight\": \"The cities in California are\", \"multi_answer\": True}\n]");
  ASSERT_TRUE(parsed.has_value());
  ASSERT_EQ(parsed->size(), 2u);
  EXPECT_EQ((*parsed)[0], (InsightQuery{"Person X was born in", false}));
  EXPECT_EQ((*parsed)[1], (InsightQuery{"The cities in California are", true}));
}

TEST(InsightListTest, EmptyDictionariesMeanNoInsights) {
  EXPECT_EQ(parse_insight_list("[{}]"), std::vector<InsightQuery>{});
  EXPECT_EQ(parse_insight_list("[]"), std::vector<InsightQuery>{});
}

TEST(InsightListTest, RejectsMalformedOutput) {
  EXPECT_FALSE(parse_insight_list("no list here").has_value());
  EXPECT_FALSE(parse_insight_list("[{\"Insight\": 3}]").has_value());
  EXPECT_FALSE(parse_insight_list("[{\"Insight\": \"a\", \"Multi-answer\": \"maybe\"}]"));
  EXPECT_FALSE(parse_insight_list("[\"just a string\"]").has_value());
}

TEST(InsightListTest, TrueInsideStringsIsUntouched) {
  const auto parsed = parse_insight_list("[{\"Insight\": \"True North uses\"}]");
  ASSERT_TRUE(parsed);
  EXPECT_EQ((*parsed)[0].fragment, "True North uses");
}

// Fixture: a two-document world where the oracle knows one fact.
class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<Document> docs(2);
    docs[0].id = "d1";
    docs[0].abstract = "zeta improves omega in practice.";
    docs[1].id = "d2";
    docs[1].abstract = "kappa uses rho and psi.";
    corpus_ = Corpus::from_documents(std::move(docs));
    doc_index_ = VectorIndex::build(document_items(corpus_), Granularity::kDocument, embedder_);
    triple_index_ = VectorIndex::build(triple_items({{"zeta", "improves", "omega", "d1"}}),
                                       Granularity::kTriple, embedder_);

    MockKB identifier;
    identifier.add("What does zeta improve?", R"([{"Insight": "zeta improves", "Multi-answer": false}])");
    identifier.add("What are the things kappa uses?", R"([{"Insight": "kappa uses", "Multi-answer": true}])");
    MockKB miner;
    miner.add("zeta improves", "omega");
    miner.add("kappa uses", std::vector<std::string>{"rho", "psi"});

    stack_.gateway = &gateway_;
    stack_.prompts = &prompts_;
    stack_.identifier = testing::handle_for(Role::kIdentifier,
                                            make_kb_backend(identifier, "Task:", "[{}]"));
    stack_.miner = testing::handle_for(Role::kMiner, make_kb_backend(miner));
    stack_.generator = testing::handle_for(Role::kGenerator, make_extractive_backend());
    stack_.corpus = &corpus_;
    stack_.doc_index = &doc_index_;
    stack_.triple_index = &triple_index_;
    stack_.embedder = &embedder_;
  }

  BenchmarkItem deep() const {
    BenchmarkItem it;
    it.id = "deep-00001";
    it.question = "What does zeta improve?";
    it.golds = {"omega"};
    it.source_docs = {"d1"};
    it.source_triples = {{"zeta", "improves", "omega"}};
    return it;
  }

  Gateway gateway_;
  PromptLibrary prompts_ = PromptLibrary::defaults();
  HashingEmbedder embedder_{64};
  Corpus corpus_;
  VectorIndex doc_index_;
  VectorIndex triple_index_;
  PipelineStack stack_;
};

TEST_F(PipelineTest, InsightRagAnswersFromMinedCompletion) {
  const RunRecord r = run_insight_rag(deep(), stack_, 1);
  EXPECT_EQ(r.parsed_answer, "omega");
  EXPECT_FALSE(r.fallback);
  ASSERT_EQ(r.insights.size(), 1u);
  EXPECT_EQ(r.insights[0].completions, std::vector<std::string>{"omega"});
  EXPECT_EQ(r.context_tokens, 1);
  EXPECT_EQ(r.calls.size(), 3u);
  EXPECT_EQ(r.prompts.back(),
            prompts_.get(PromptKind::kAugmentedQa)
                .render({"What does zeta improve?", "zeta improves → omega"}));
  EXPECT_TRUE(r.error.empty());
}

TEST_F(PipelineTest, MultiAnswerInsightsSampleAndDeduplicate) {
  BenchmarkItem it = deep();
  it.id = "multi-00001";
  it.kind = ItemKind::kMulti;
  it.question = "What are the things kappa uses?";
  it.golds = {"rho", "psi"};
  it.source_docs = {"d1", "d2"};
  const RunRecord r = run_insight_rag(it, stack_, 1);
  ASSERT_EQ(r.insights.size(), 1u);
  EXPECT_EQ(r.insights[0].completions, std::vector<std::string>{"rho; psi"});
  EXPECT_EQ(r.calls[1].n, 10);
}

TEST_F(PipelineTest, NoInsightsFallsBackToVanilla) {
  BenchmarkItem it = deep();
  it.question = "Unknown question?";
  const RunRecord r = run_insight_rag(it, stack_, 1);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.prompts.back(), prompts_.get(PromptKind::kQa).render({"Unknown question?"}));
  EXPECT_EQ(r.context_tokens, 0);
}

TEST_F(PipelineTest, IdentifierIsRepromptedOnceThenFails) {
  auto flaky = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Step>{
      ScriptedBackend::reply("I think the insight is zeta"),
      ScriptedBackend::reply("[{\"Insight\": \"zeta improves\", \"Multi-answer\": false}]")});
  stack_.identifier = testing::handle_for(Role::kIdentifier, flaky);
  EXPECT_EQ(run_insight_rag(deep(), stack_, 1).parsed_answer, "omega");
  EXPECT_EQ(flaky->requests().back().messages.size(), 3u);

  stack_.identifier =
      testing::handle_for(Role::kIdentifier, make_canned_backend("still not a list"));
  const RunRecord failed = run_item(deep(), Pipeline::kInsight, 1, stack_);
  EXPECT_EQ(failed.error.rfind("identifier: ", 0), 0u) << failed.error;
}

TEST_F(PipelineTest, MinerCompletionsAreCappedJointly) {
  auto verbose = std::make_shared<MockBackend>("verbose", [](const ChatRequest& r) {
    static int calls = 0;
    std::string out;
    for (int i = 0; i < 60; ++i) out += "w" + std::to_string(calls) + " ";
    ++calls;
    (void)r;
    return out;
  });
  stack_.miner = testing::handle_for(Role::kMiner, verbose);
  const auto mined = mine_insights({{"kappa uses", true}}, 1, stack_);
  std::size_t tokens = 0;
  for (const auto& c : mined[0].completions) tokens += count_tokens(c);
  EXPECT_LE(tokens, 100u);
}

TEST_F(PipelineTest, OnlyTheFirstMInsightsAreMined) {
  const auto mined = mine_insights({{"zeta improves", false}, {"kappa uses", false}}, 1, stack_);
  ASSERT_EQ(mined.size(), 1u);
  EXPECT_EQ(mined[0].query.fragment, "zeta improves");
}

TEST_F(PipelineTest, RagUsesRetrievedPayloads) {
  const RunRecord r = run_rag(deep(), stack_, Granularity::kTriple, 1);
  EXPECT_EQ(r.context_tokens, 3);
  EXPECT_EQ(r.prompts[0], prompts_.get(PromptKind::kAugmentedQa)
                              .render({"What does zeta improve?", "zeta improves omega"}));
  const RunRecord d = run_rag(deep(), stack_, Granularity::kDocument, 2);
  EXPECT_EQ(d.context_tokens, 10);
  EXPECT_THROW(run_rag(deep(), stack_, Granularity::kDocument, 0), Error);
}

TEST_F(PipelineTest, VanillaUsesThePlainPrompt) {
  const RunRecord r = run_vanilla(deep(), stack_);
  EXPECT_EQ(r.prompts, std::vector<std::string>{"Answer the question. Do not include any "
                                                "extra explanation.\nQuestion: What does "
                                                "zeta improve?"});
}

TEST(MatchingAnswerTest, ParsesJsonAndRecoversFromMalformedJson) {
  EXPECT_EQ(parse_matching_answer(R"({"explanation": "x", "answer": "Yes"})"), "Yes");
  EXPECT_EQ(parse_matching_answer("```json\n{\"Answer\": \"no.\"}\n```"), "No");
  EXPECT_EQ(parse_matching_answer(R"({"explanation": "a "quoted" b", "answer": "yes"})"), "Yes");
  EXPECT_FALSE(parse_matching_answer("Probably yes").has_value());
  EXPECT_FALSE(parse_matching_answer(R"({"answer": "maybe"})").has_value());
}

TEST_F(PipelineTest, MatchingModes) {
  BenchmarkItem m;
  m.id = "match-00001";
  m.kind = ItemKind::kMatching;
  m.source_docs = {"d1", "d2"};
  m.pair = MatchingItem{"d1", "d2", false};
  stack_.generator = testing::handle_for(
      Role::kGenerator, make_canned_backend(R"({"explanation": "e", "answer": "No"})"));
  const RunRecord v = run_item(m, Pipeline::kVanilla, 0, stack_);
  EXPECT_EQ(v.parsed_answer, "No");
  EXPECT_EQ(v.prompts[0], prompts_.get(PromptKind::kMatching)
                              .render({corpus_.at("d1").abstract, corpus_.at("d2").abstract}));
  // Both documents are the pair itself, so nothing is appended.
  const RunRecord rag = run_item(m, Pipeline::kRagDoc, 1, stack_);
  EXPECT_EQ(rag.context_tokens, 0);
  EXPECT_EQ(rag.prompts[0], v.prompts[0]);
  const RunRecord ins = run_item(m, Pipeline::kInsight, 1, stack_);
  EXPECT_TRUE(ins.fallback);
  EXPECT_EQ(ins.prompts.back(),
            prompts_.get(PromptKind::kAugmentedMatching)
                .render({corpus_.at("d1").abstract, corpus_.at("d2").abstract, ""}));

  stack_.generator = testing::handle_for(Role::kGenerator, make_canned_backend("unsure"));
  const RunRecord bad = run_item(m, Pipeline::kVanilla, 0, stack_);
  EXPECT_EQ(bad.error.rfind("generator: ", 0), 0u);
  EXPECT_EQ(bad.parsed_answer, "");
}

TEST_F(PipelineTest, MatchingRagAppendsTheBestOtherDocument) {
  std::vector<Document> docs(3);
  docs[0] = {"d1", "", "graph parsing with neural models", {}, 0};
  docs[1] = {"d2", "", "neural models for translation", {}, 0};
  docs[2] = {"d3", "", "graph parsing and translation with neural models", {}, 0};
  corpus_ = Corpus::from_documents(docs);
  doc_index_ = VectorIndex::build(document_items(corpus_), Granularity::kDocument, embedder_);
  BenchmarkItem m;
  m.id = "match-00001";
  m.kind = ItemKind::kMatching;
  m.source_docs = {"d1", "d2"};
  m.pair = MatchingItem{"d1", "d2", true};
  stack_.generator = testing::handle_for(Role::kGenerator,
                                         make_canned_backend(R"({"answer": "Yes"})"));
  const RunRecord r = run_matching(m, MatchingMode::kRag1, stack_);
  EXPECT_EQ(r.k_or_m, 1);
  EXPECT_NE(r.prompts[0].find("\n\nContext: graph parsing and translation"), std::string::npos);
  EXPECT_EQ(r.context_tokens, 7);
}

TEST_F(PipelineTest, RecordsRoundTripAndReplay) {
  TempDir dir;
  std::vector<RunRecord> records = {run_insight_rag(deep(), stack_, 1), run_vanilla(deep(), stack_)};
  write_file_atomic(dir / "runs.jsonl", serialize_run_records(records));
  const auto back = load_run_records(dir / "runs.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(serialize_run_records(back), serialize_run_records(records));
  EXPECT_TRUE(replay_matches(back[0], stack_));
  stack_.miner = testing::handle_for(Role::kMiner, make_canned_backend("something else"));
  EXPECT_FALSE(replay_matches(back[0], stack_));
}

TEST_F(PipelineTest, BatchPreservesOrder) {
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 20; ++i) {
    BenchmarkItem it = deep();
    it.id = "deep-" + std::to_string(100 + i);
    items.push_back(it);
  }
  const auto out = run_batch(items, Pipeline::kInsight, 1, stack_, 4);
  for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(out[i].item_id, items[i].id);
}

}  // namespace
}  // namespace quarry
