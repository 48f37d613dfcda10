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

// Run configuration: inputs, per-role model handles, the embedder, sweep
// lists and the working directory. Relative paths resolve against the
// directory of the configuration file.

#ifndef QUARRY_CONFIG_H_
#define QUARRY_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "quarry/embedding.h"
#include "quarry/evalkit.h"
#include "quarry/gateway.h"
#include "quarry/io.h"
#include "quarry/pipelines.h"

namespace quarry {

struct EmbedderConfig {
  std::string kind = "hashing";  // "hashing" | "http"
  std::size_t dim = 256;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "QUARRY_API_KEY";
  int retry_limit = 3;
  std::size_t batch_size = 32;
};

struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path workdir = "work";
  std::filesystem::path corpus;
  std::filesystem::path matching;        // optional
  std::filesystem::path triples;         // optional pre-extracted triples
  std::filesystem::path relation_rules;  // optional
  std::filesystem::path stoplist;        // optional
  std::filesystem::path prompts_dir;     // optional
  std::filesystem::path benchmark;       // optional override
  std::uint64_t seed = 0;
  std::map<Role, Json> models;
  EmbedderConfig embedder;
  std::vector<Pipeline> pipelines = {Pipeline::kVanilla, Pipeline::kRagDoc,
                                     Pipeline::kRagTriple, Pipeline::kInsight};
  std::vector<int> k_values = {1, 3, 10, 50};
  std::vector<int> m_values = {1};
  std::size_t workers = 4;
  int multi_answer_samples = 10;
  NormalizeOptions normalize;
  std::vector<std::string> bfs_seeds;
  std::size_t bfs_size = 0;  // 0: keep the whole corpus
  Json raw;

  // Unknown keys are rejected so typos do not silently fall back to
  // defaults.
  static RunConfig from_json(const Json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  // Throws Error when a referenced input is missing or a sweep list is
  // empty.
  void validate() const;

  // Builds the handle and backend for `role`. Throws Error when the role is
  // not configured.
  ModelHandle handle(Role role) const;
  bool has_model(Role role) const { return models.count(role) > 0; }

  std::unique_ptr<Embedder> make_embedder() const;

  // Digest of the canonical configuration text.
  std::string digest() const;
};

}  // namespace quarry

#endif  // QUARRY_CONFIG_H_
