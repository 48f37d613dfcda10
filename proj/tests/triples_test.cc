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

#include <fstream>

#include <gtest/gtest.h>

#include "quarry/gateway.h"
#include "quarry/mock_backends.h"
#include "quarry/prompts.h"
#include "quarry/triples.h"
#include "test_support.h"

namespace quarry {
namespace {

using testing::TempDir;

TEST(ExtractorOutputTest, ParsesCommonListShapes) {
  const ExtractionResult r = parse_extractor_output(
      "1. BERT | uses | attention\n"
      "- (GPT | extends | transformer)\n"
      "* [ELMo | uses | LSTM]\n"
      "\n"
      "not a triple\n"
      "a | b\n"
      "a | | c\n"
      "x | y | z | w\n"
      "BERT | uses | attention\n",
      "d1");
  ASSERT_EQ(r.triples.size(), 3u);
  EXPECT_EQ(r.triples[0], (Triple{"BERT", "uses", "attention", "d1"}));
  EXPECT_EQ(r.triples[1], (Triple{"GPT", "extends", "transformer", "d1"}));
  EXPECT_EQ(r.triples[2], (Triple{"ELMo", "uses", "LSTM", "d1"}));
  EXPECT_EQ(r.skipped_lines, 4u);
}

TEST(ExtractTest, UsesTheExtractionPromptAndIsReproducible) {
  MockKB kb;
  kb.add("Our model uses attention.", "our model | uses | attention");
  ModelHandle h = ModelHandle::defaults_for(Role::kExtractor);
  h.backend = make_kb_backend(kb, "Abstract:");
  Gateway gateway;
  Document d;
  d.id = "p1";
  d.abstract = "Our model uses attention.";
  const auto prompts = PromptLibrary::defaults();
  const ExtractionResult a = extract_triples(d, gateway, h, prompts);
  const ExtractionResult b = extract_triples(d, gateway, h, prompts);
  ASSERT_EQ(a.triples.size(), 1u);
  EXPECT_EQ(a.triples, b.triples);
  const auto calls = gateway.log().snapshot();
  EXPECT_EQ(calls[0].messages[0].content,
            prompts.get(PromptKind::kExtract).render({d.abstract}));
}

TEST(NormalizeTest, FoldsAndRewritesRelations) {
  RelationRules rules;
  rules.canonical_map = {{"is used in", "used in"}, {"makes use of", "uses"}};
  validate_rules(rules);
  EXPECT_EQ(normalize_relation("Is  used IN", rules), "used in");
  EXPECT_EQ(normalize_relation("makes use of the", rules), "uses");
  EXPECT_EQ(normalize_relation("is an extension of", rules), "is extension of");
}

TEST(NormalizeTest, RejectsChains) {
  RelationRules rules;
  rules.canonical_map = {{"employs", "makes use of"}, {"makes use of", "uses"}};
  EXPECT_THROW(validate_rules(rules), Error);
}

TEST(NormalizeTest, DeduplicatesAfterFolding) {
  const auto out = normalize_relations(
      {{"BERT", "Uses", "Attention", "d"}, {"bert", "uses", "attention", "d"},
       {"bert", "uses", "attention", "e"}},
      {});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], (Triple{"bert", "uses", "attention", "d"}));
}

TEST(NormalizeTest, LoadRulesFile) {
  TempDir dir;
  std::ofstream(dir / "rules.tsv") << "# comment\nMakes use of\tuses\n\n";
  const RelationRules rules = load_relation_rules(dir / "rules.tsv");
  EXPECT_EQ(normalize_relation("makes use of", rules), "uses");
  std::ofstream(dir / "bad.tsv") << "no tab here\n";
  EXPECT_THROW(load_relation_rules(dir / "bad.tsv"), ParseError);
}

TEST(FilterTest, DropsPronounAndGenericArguments) {
  const auto stop = default_stoplist();
  const auto kept = filter_noisy({{"we", "propose", "a model", "d"},
                                  {"this paper", "presents", "x", "d"},
                                  {"bert", "uses", "it", "d"},
                                  {"bert", "uses", "attention", "d"}},
                                 stop);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].object, "attention");
}

TEST(IndexTest, GroupsBySubjectRelationInStableOrder) {
  const TripleIndex index = index_triples({{"s", "r", "o2", "d2"},
                                           {"s", "r", "o1", "d2"},
                                           {"s", "r", "o3", "d1"},
                                           {"t", "r", "o", "d1"}});
  EXPECT_EQ(index.triple_count(), 4u);
  const auto* entries = index.find({"s", "r"});
  ASSERT_NE(entries, nullptr);
  EXPECT_EQ(*entries, (std::vector<TripleEntry>{{"o3", "d1"}, {"o1", "d2"}, {"o2", "d2"}}));
  EXPECT_EQ(index.find({"s", "x"}), nullptr);
}

TEST(TripleIoTest, RoundTrip) {
  TempDir dir;
  const std::vector<Triple> triples = {{"a", "b", "c", "d"}, {"e \"q\"", "f", "g", "h"}};
  write_file_atomic(dir / "t.jsonl", serialize_triples(triples));
  EXPECT_EQ(load_triples(dir / "t.jsonl"), triples);
}

}  // namespace
}  // namespace quarry
