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

#include "quarry/corpus.h"
#include "test_support.h"

namespace quarry {
namespace {

using testing::TempDir;

Document doc(std::string id, std::set<std::string> neighbors = {}) {
  Document d;
  d.id = std::move(id);
  d.abstract = "abstract of " + d.id;
  d.neighbors = std::move(neighbors);
  return d;
}

TEST(CorpusTest, EdgesAreSymmetricAndDanglingOnesDropped) {
  const Corpus c = Corpus::from_documents({doc("a", {"b", "zzz", "a"}), doc("b"), doc("c")});
  EXPECT_EQ(c.at("b").neighbors, std::set<std::string>{"a"});
  EXPECT_EQ(c.at("a").neighbors, std::set<std::string>{"b"});
  EXPECT_EQ(c.edge_count(), 1u);
  EXPECT_EQ(c.dropped_edges(), 2u);
  EXPECT_THROW(c.at("nope"), Error);
}

TEST(CorpusTest, RejectsDuplicatesAndEmptyAbstracts) {
  EXPECT_THROW(Corpus::from_documents({doc("a"), doc("a")}), Error);
  Document empty = doc("x");
  empty.abstract = "  ";
  EXPECT_THROW(Corpus::from_documents({empty}), Error);
}

TEST(CorpusTest, IngestRoundTrip) {
  TempDir dir;
  std::ofstream(dir / "c.jsonl")
      << R"({"id":"p2","title":"T","abstract":"two  words","neighbors":["p1"]})" "\n"
      << R"({"id":"p1","abstract":"one"})" "\n";
  const Corpus c = ingest_corpus(dir / "c.jsonl");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at("p1").neighbors, std::set<std::string>{"p2"});
  EXPECT_EQ(c.at("p2").token_count, 2u);
  EXPECT_DOUBLE_EQ(c.mean_token_count(), 1.5);
  write_file_atomic(dir / "d.jsonl", serialize_corpus(c));
  EXPECT_EQ(ingest_corpus(dir / "d.jsonl"), c);
}

TEST(CorpusTest, IngestReportsBadRecords) {
  TempDir dir;
  std::ofstream(dir / "c.jsonl") << R"({"id":"p1"})" "\n";
  EXPECT_THROW(ingest_corpus(dir / "c.jsonl"), ParseError);
  std::ofstream(dir / "d.jsonl") << R"({"id":"p1","abstract":"x","neighbors":"p2"})" "\n";
  EXPECT_THROW(ingest_corpus(dir / "d.jsonl"), ParseError);
}

TEST(BfsTest, OrderIsBreadthFirstByAscendingId) {
  // a - c, a - b, b - d, e isolated
  const Corpus c = Corpus::from_documents(
      {doc("a", {"c", "b"}), doc("b", {"d"}), doc("c"), doc("d"), doc("e")});
  EXPECT_EQ(bfs_sample(c, {"a"}, 4), (std::vector<std::string>{"a", "b", "c", "d"}));
  // Disconnected remainder restarts from the smallest unvisited id.
  EXPECT_EQ(bfs_sample(c, {"d"}, 5), (std::vector<std::string>{"d", "b", "a", "c", "e"}));
  EXPECT_EQ(bfs_sample(c, {"a"}, 99).size(), 5u);
  EXPECT_THROW(bfs_sample(c, {"q"}, 2), Error);
}

TEST(BfsTest, SubsetKeepsOnlyInternalEdges) {
  const Corpus c = Corpus::from_documents({doc("a", {"b", "c"}), doc("b"), doc("c")});
  const Corpus s = c.subset({"a", "b"});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.at("a").neighbors, std::set<std::string>{"b"});
}

TEST(BfsTest, MatchingEdgesExtendTheGraph) {
  const Corpus c = Corpus::from_documents({doc("a"), doc("b"), doc("c")});
  const Corpus g = c.with_matching_edges({{"a", "c", true}, {"a", "b", false}, {"a", "x", true}});
  EXPECT_EQ(g.at("a").neighbors, std::set<std::string>{"c"});
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(MatchingTest, LoadDropsUnresolvablePairs) {
  TempDir dir;
  const Corpus c = Corpus::from_documents({doc("a"), doc("b")});
  std::ofstream(dir / "m.jsonl") << R"({"doc_a":"a","doc_b":"b","label":1})" "\n"
                                 << R"({"doc_a":"a","doc_b":"a","label":true})" "\n"
                                 << R"({"doc_a":"a","doc_b":"q","label":false})" "\n";
  const MatchingLoad load = load_matching_pairs(dir / "m.jsonl", c);
  ASSERT_EQ(load.pairs.size(), 1u);
  EXPECT_TRUE(load.pairs[0].label);
  EXPECT_EQ(load.dropped, 2u);
  std::ofstream(dir / "bad.jsonl") << R"({"doc_a":"a","doc_b":"b","label":"yes"})" "\n";
  EXPECT_THROW(load_matching_pairs(dir / "bad.jsonl", c), ParseError);
}

}  // namespace
}  // namespace quarry
