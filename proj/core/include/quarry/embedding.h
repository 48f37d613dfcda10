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

// Text embedders. Every vector leaving embed() has unit L2 norm.

#ifndef QUARRY_EMBEDDING_H_
#define QUARRY_EMBEDDING_H_

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "quarry/io.h"

namespace quarry {

using Vector = std::vector<float>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Raw (not necessarily normalized) vectors, one per text.
  virtual std::vector<Vector> embed_batch(const std::vector<std::string>& texts) = 0;
  // Identity recorded in index manifests, e.g. "hashing:256".
  virtual std::string id() const = 0;
  virtual std::size_t batch_size() const { return 32; }
};

// Offline default: signed feature hashing of lowercase alphanumeric tokens.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 256);
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override;

 private:
  std::size_t dim_;
};

// Wraps a function; used for scripted embedders in tests.
class FunctionEmbedder : public Embedder {
 public:
  using Fn = std::function<Vector(const std::string&)>;
  FunctionEmbedder(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override { return id_; }

 private:
  std::string id_;
  Fn fn_;
};

// OpenAI-style "<base>/embeddings" endpoint. Retryable transport errors are
// retried up to `retry_limit` times with exponential backoff.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, std::string model, std::string api_key,
               int retry_limit = 3, std::size_t batch_size = 32,
               std::function<void(std::chrono::milliseconds)> sleep = {});
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override { return "http:" + endpoint_ + "#" + model_; }
  std::size_t batch_size() const override { return batch_size_; }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
  int retry_limit_;
  std::size_t batch_size_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

// Scales `v` to unit L2 norm. Throws Error for a zero or non-finite norm.
void normalize(Vector& v);

// Embeds `texts` in batches of embedder.batch_size(), up to `parallelism`
// batches at a time, and normalizes every vector. Throws Error when the
// embedder returns the wrong number of vectors or inconsistent dimensions.
std::vector<Vector> embed(const std::vector<std::string>& texts,
                          Embedder& embedder, std::size_t parallelism = 4);

// Parses an embeddings response body, ordering by "index" when present.
std::vector<Vector> embeddings_from_json(const Json& body);

}  // namespace quarry

#endif  // QUARRY_EMBEDDING_H_
