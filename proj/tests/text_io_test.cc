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

#include <atomic>
#include <fstream>

#include <gtest/gtest.h>

#include "quarry/io.h"
#include "quarry/text.h"
#include "test_support.h"

namespace quarry {
namespace {

using testing::TempDir;

TEST(TextTest, FoldAndCollapse) {
  EXPECT_EQ(fold_and_collapse("  Graph \t Neural\nNetwork  "), "graph neural network");
  EXPECT_EQ(collapse_whitespace("\n\n"), "");
  EXPECT_EQ(fold_case("ÄBC"), "Äbc");
}

TEST(TextTest, CountAndTruncateTokens) {
  EXPECT_EQ(count_tokens(""), 0u);
  EXPECT_EQ(count_tokens(" a  b\tc\n"), 3u);
  EXPECT_EQ(truncate_tokens("a b c d", 2), "a b");
  EXPECT_EQ(truncate_tokens("a  b", 5), "a  b");
}

TEST(TextTest, OccurrencesAreNonOverlappingAndCaseInsensitive) {
  EXPECT_EQ(count_occurrences_ci("aaaa", "aa"), 2u);
  EXPECT_EQ(count_occurrences_ci("BERT and bert", "Bert"), 2u);
  EXPECT_EQ(count_occurrences_ci("abc", ""), 0u);
  EXPECT_TRUE(contains_ci("Hello World", "WORLD"));
}

TEST(DigestTest, PartsAreLengthPrefixed) {
  Digest a;
  a.add("ab").add("c");
  Digest b;
  b.add("a").add("bc");
  EXPECT_NE(a.hex(), b.hex());
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(IoTest, AtomicWriteAndJsonl) {
  TempDir dir;
  const auto path = dir / "nested/out.jsonl";
  write_file_atomic(path, to_jsonl({Json{{"a", 1}}, Json{{"a", 2}}}));
  int sum = 0;
  for_each_jsonl(path, [&](const Json& j, std::size_t) { sum += j.at("a").get<int>(); });
  EXPECT_EQ(sum, 3);
  for (const auto& entry : std::filesystem::directory_iterator(path.parent_path())) {
    EXPECT_EQ(entry.path().filename(), "out.jsonl");
  }
}

TEST(IoTest, JsonlErrorsNameTheLine) {
  TempDir dir;
  std::ofstream(dir / "bad.jsonl") << "{\"a\":1}\n\n{oops\n";
  try {
    for_each_jsonl(dir / "bad.jsonl", [](const Json&, std::size_t) {});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(IoTest, ParallelForVisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(IoTest, ParallelForPropagatesExceptions) {
  EXPECT_THROW(parallel_for(50, 4,
                            [](std::size_t i) {
                              if (i == 17) throw Error("boom");
                            }),
               Error);
}

}  // namespace
}  // namespace quarry
