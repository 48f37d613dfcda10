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

#include "quarry/config.h"

#include <set>

#include "quarry/http_backend.h"
#include "quarry/mock_backends.h"
#include "quarry/text.h"

namespace quarry {
namespace {

const std::set<std::string> kTopKeys = {
    "workdir", "corpus",    "matching",  "triples",  "relation_rules",
    "stoplist", "prompts_dir", "benchmark", "seed",   "models",
    "embedder", "pipelines", "k_values",  "m_values", "workers",
    "multi_answer_samples",  "normalize", "bfs"};

const std::set<std::string> kModelKeys = {
    "backend",     "mock",      "endpoint",           "model",
    "api_key_env", "temperature", "max_tokens",       "strip_think_blocks",
    "retry_limit", "parallelism", "timeout_s"};

void check_keys(const Json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw Error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (allowed.count(key) == 0) {
      throw Error("unknown key \"" + key + "\" in " + where);
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const Json& j,
                              const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  std::filesystem::path p = j[key].get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
  check_keys(j, kTopKeys, "config");
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  try {
    if (auto w = resolve(base_dir, j, "workdir"); !w.empty()) {
      c.workdir = w;
    } else {
      c.workdir = base_dir.empty() ? c.workdir : base_dir / c.workdir;
    }
    c.corpus = resolve(base_dir, j, "corpus");
    c.matching = resolve(base_dir, j, "matching");
    c.triples = resolve(base_dir, j, "triples");
    c.relation_rules = resolve(base_dir, j, "relation_rules");
    c.stoplist = resolve(base_dir, j, "stoplist");
    c.prompts_dir = resolve(base_dir, j, "prompts_dir");
    c.benchmark = resolve(base_dir, j, "benchmark");
    c.seed = j.value("seed", std::uint64_t{0});
    if (auto m = j.find("models"); m != j.end()) {
      if (!m->is_object()) throw Error("\"models\" must be an object");
      for (const auto& [name, spec] : m->items()) {
        check_keys(spec, kModelKeys, "models." + name);
        c.models[parse_role(name)] = spec;
      }
    }
    if (auto e = j.find("embedder"); e != j.end()) {
      check_keys(*e, {"kind", "dim", "endpoint", "model", "api_key_env",
                      "retry_limit", "batch_size"},
                 "embedder");
      c.embedder.kind = e->value("kind", c.embedder.kind);
      c.embedder.dim = e->value("dim", c.embedder.dim);
      c.embedder.endpoint = e->value("endpoint", c.embedder.endpoint);
      c.embedder.model = e->value("model", c.embedder.model);
      c.embedder.api_key_env = e->value("api_key_env", c.embedder.api_key_env);
      c.embedder.retry_limit = e->value("retry_limit", c.embedder.retry_limit);
      c.embedder.batch_size = e->value("batch_size", c.embedder.batch_size);
    }
    if (auto p = j.find("pipelines"); p != j.end()) {
      c.pipelines.clear();
      for (const auto& name : *p) c.pipelines.push_back(parse_pipeline(name.get<std::string>()));
    }
    if (j.contains("k_values")) c.k_values = j["k_values"].get<std::vector<int>>();
    if (j.contains("m_values")) c.m_values = j["m_values"].get<std::vector<int>>();
    c.workers = j.value("workers", c.workers);
    c.multi_answer_samples = j.value("multi_answer_samples", c.multi_answer_samples);
    if (auto n = j.find("normalize"); n != j.end()) {
      check_keys(*n, {"remove_articles"}, "normalize");
      c.normalize.remove_articles = n->value("remove_articles", false);
    }
    if (auto b = j.find("bfs"); b != j.end()) {
      check_keys(*b, {"seeds", "size"}, "bfs");
      c.bfs_seeds = b->value("seeds", std::vector<std::string>());
      c.bfs_size = b->value("size", std::size_t{0});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void RunConfig::validate() const {
  if (corpus.empty()) throw Error("config: \"corpus\" is required");
  for (const auto* p : {&corpus, &matching, &triples, &relation_rules, &stoplist,
                        &prompts_dir}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw Error("config: path does not exist: " + p->string());
    }
  }
  if (pipelines.empty()) throw Error("config: \"pipelines\" must be nonempty");
  if (k_values.empty()) throw Error("config: \"k_values\" must be nonempty");
  if (m_values.empty()) throw Error("config: \"m_values\" must be nonempty");
  for (int k : k_values) {
    if (k < 1) throw Error("config: k values must be >= 1");
  }
  for (int m : m_values) {
    if (m < 1) throw Error("config: m values must be >= 1");
  }
  if (workers < 1) throw Error("config: \"workers\" must be >= 1");
  if (embedder.kind != "hashing" && embedder.kind != "http") {
    throw Error("config: unknown embedder kind \"" + embedder.kind + "\"");
  }
}

ModelHandle RunConfig::handle(Role role) const {
  auto it = models.find(role);
  if (it == models.end()) {
    throw Error("config: no model configured for role " + std::string(role_name(role)));
  }
  const Json& spec = it->second;
  ModelHandle h = ModelHandle::defaults_for(role);
  h.endpoint = spec.value("endpoint", std::string());
  h.model_name = spec.value("model", std::string(role_name(role)));
  h.temperature = spec.value("temperature", h.temperature);
  h.max_tokens = spec.value("max_tokens", h.max_tokens);
  h.strip_think_blocks = spec.value("strip_think_blocks", h.strip_think_blocks);
  h.retry_limit = spec.value("retry_limit", h.retry_limit);
  h.parallelism_cap = spec.value("parallelism", h.parallelism_cap);
  const std::string backend = spec.value("backend", std::string("http"));
  if (backend == "mock") {
    h.backend = make_mock_backend(spec.value("mock", Json::object()), base_dir);
    h.endpoint = "mock";
  } else if (backend == "http") {
    if (h.endpoint.empty()) {
      throw Error("config: role " + std::string(role_name(role)) + " needs an endpoint");
    }
    h.backend = std::make_shared<HttpChatBackend>(
        h.endpoint, api_key_from_env(spec.value("api_key_env", std::string("QUARRY_API_KEY"))),
        std::chrono::seconds(spec.value("timeout_s", 120)));
  } else {
    throw Error("config: unknown backend \"" + backend + "\"");
  }
  h.validate();
  return h;
}

std::unique_ptr<Embedder> RunConfig::make_embedder() const {
  if (embedder.kind == "hashing") return std::make_unique<HashingEmbedder>(embedder.dim);
  if (embedder.kind == "http") {
    if (embedder.endpoint.empty()) throw Error("config: http embedder needs an endpoint");
    return std::make_unique<HttpEmbedder>(embedder.endpoint, embedder.model,
                                          api_key_from_env(embedder.api_key_env),
                                          embedder.retry_limit, embedder.batch_size);
  }
  throw Error("config: unknown embedder kind \"" + embedder.kind + "\"");
}

std::string RunConfig::digest() const { return sha256_hex(raw.dump()); }

}  // namespace quarry
