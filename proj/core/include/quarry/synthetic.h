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

// Deterministic synthetic worlds for offline end-to-end runs: a corpus of
// abstracts with planted facts, the triples an ideal extractor would emit,
// matching pairs, and oracle tables for the mock backends.

#ifndef QUARRY_SYNTHETIC_H_
#define QUARRY_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "quarry/benchbuild.h"
#include "quarry/corpus.h"
#include "quarry/mock_backends.h"
#include "quarry/triples.h"

namespace quarry {

struct SyntheticOptions {
  std::size_t documents = 200;
  std::uint64_t seed = 7;
  std::size_t tokens_per_document = 150;  // approximate
  std::size_t multi_group_size = 3;       // documents sharing a subject
  std::size_t multi_groups = 20;
  std::size_t matching_pairs = 100;
};

struct SyntheticWorld {
  Corpus corpus;
  std::vector<Triple> triples;       // raw extractor output, incl. noise
  std::vector<MatchingItem> pairs;
  MockKB extractor_kb;               // abstract -> "s | r | o" lines
};

// Every document plants one fact whose subject and object occur exactly
// once in its abstract, plus one noise triple with a pronoun subject.
// Groups of documents share a subject with distinct objects.
SyntheticWorld make_synthetic_world(const SyntheticOptions& opts = {});

// Identifier oracle: question -> [{"Insight": "<s> <r>", "Multi-answer": ..}].
MockKB oracle_identifier_kb(const std::vector<BenchmarkItem>& items);
// Miner oracle: "<s> <r>" -> golds.
MockKB oracle_miner_kb(const std::vector<BenchmarkItem>& items);

}  // namespace quarry

#endif  // QUARRY_SYNTHETIC_H_
