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

// The quarry command line. Commands read a run configuration, consume the
// artifacts of upstream commands from the working directory and write
// their own atomically, recording a manifest line per artifact set.

#ifndef QUARRY_TOOLS_COMMANDS_H_
#define QUARRY_TOOLS_COMMANDS_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace quarry::cli {

// Fixed artifact locations under a working directory.
struct Workspace {
  std::filesystem::path dir;

  std::filesystem::path corpus() const { return dir / "corpus.jsonl"; }
  std::filesystem::path matching() const { return dir / "matching.jsonl"; }
  std::filesystem::path raw_triples() const { return dir / "triples.raw.jsonl"; }
  std::filesystem::path triples() const { return dir / "triples.jsonl"; }
  std::filesystem::path benchmark() const { return dir / "benchmark.jsonl"; }
  std::filesystem::path review() const { return dir / "review.tsv"; }
  std::filesystem::path bench_stats() const { return dir / "benchmark.stats.json"; }
  std::filesystem::path doc_index() const { return dir / "index" / "document.qvx"; }
  std::filesystem::path triple_index() const { return dir / "index" / "triple.qvx"; }
  std::filesystem::path retriever_eval() const { return dir / "retriever_eval.json"; }
  std::filesystem::path runs() const { return dir / "runs.jsonl"; }
  std::filesystem::path metrics() const { return dir / "metrics.json"; }
  std::filesystem::path report_dir() const { return dir / "report"; }
  std::filesystem::path zscores() const { return dir / "zscores.tsv"; }
  std::filesystem::path manifest() const { return dir / "manifest.jsonl"; }
};

// Parses `args` (without the program name) and runs one command. Returns
// the process exit status; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quarry::cli

#endif  // QUARRY_TOOLS_COMMANDS_H_
