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

#include "quarry/embedding.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <thread>

#include "quarry/gateway.h"
#include "quarry/http_backend.h"
#include "quarry/text.h"

namespace quarry {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error("hashing embedder dimension must be positive");
}

std::vector<Vector> HashingEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Vector v(dim_, 0.0f);
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      const std::uint64_t h = fnv1a(token);
      v[h % dim_] += (h >> 63) ? -1.0f : 1.0f;
      token.clear();
    };
    for (unsigned char c : text) {
      if (std::isalnum(c)) {
        token += static_cast<char>(std::tolower(c));
      } else {
        flush();
      }
    }
    flush();
    out.push_back(std::move(v));
  }
  return out;
}

std::string HashingEmbedder::id() const { return "hashing:" + std::to_string(dim_); }

std::vector<Vector> FunctionEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(fn_(t));
  return out;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string model,
                           std::string api_key, int retry_limit,
                           std::size_t batch_size,
                           std::function<void(std::chrono::milliseconds)> sleep)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      retry_limit_(retry_limit),
      batch_size_(std::max<std::size_t>(batch_size, 1)),
      sleep_(std::move(sleep)) {
  if (!sleep_) {
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::vector<Vector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
  const HttpEndpoint ep = parse_endpoint(endpoint_);
  const Json body = {{"model", model_}, {"input", texts}};
  std::chrono::milliseconds delay(500);
  for (int attempt = 0;; ++attempt) {
    try {
      return embeddings_from_json(
          http_post_json(ep, "/embeddings", body, api_key_, std::chrono::seconds(120)));
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= retry_limit_) throw;
      auto wait = delay;
      if (e.retry_after_s() > 0) {
        wait = std::chrono::milliseconds(
            static_cast<long>(e.retry_after_s() * 1000.0));
      }
      sleep_(wait);
      delay = std::min(delay * 2, std::chrono::milliseconds(16000));
    }
  }
}

std::vector<Vector> embeddings_from_json(const Json& body) {
  const auto data = body.find("data");
  if (data == body.end() || !data->is_array()) {
    throw TransportError("embeddings response has no data array", 200, false);
  }
  std::vector<std::pair<long, Vector>> indexed;
  long pos = 0;
  for (const auto& d : *data) {
    indexed.emplace_back(d.value("index", pos),
                         d.at("embedding").get<Vector>());
    ++pos;
  }
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vector> out;
  for (auto& [i, v] : indexed) out.push_back(std::move(v));
  return out;
}

void normalize(Vector& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error("cannot normalize a zero or non-finite embedding");
  }
  for (float& x : v) x = static_cast<float>(x / norm);
}

std::vector<Vector> embed(const std::vector<std::string>& texts,
                          Embedder& embedder, std::size_t parallelism) {
  if (texts.empty()) return {};
  const std::size_t bs = std::max<std::size_t>(embedder.batch_size(), 1);
  const std::size_t batches = (texts.size() + bs - 1) / bs;
  std::vector<Vector> out(texts.size());
  parallel_for(batches, parallelism, [&](std::size_t b) {
    const std::size_t begin = b * bs;
    const std::size_t end = std::min(texts.size(), begin + bs);
    std::vector<std::string> chunk(texts.begin() + begin, texts.begin() + end);
    std::vector<Vector> vecs = embedder.embed_batch(chunk);
    if (vecs.size() != chunk.size()) {
      throw Error("embedder " + embedder.id() + " returned " +
                  std::to_string(vecs.size()) + " vectors for " +
                  std::to_string(chunk.size()) + " texts");
    }
    for (std::size_t i = 0; i < vecs.size(); ++i) out[begin + i] = std::move(vecs[i]);
  });
  const std::size_t dim = out.front().size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() != dim || dim == 0) {
      throw Error("embedding dimension mismatch: text " + std::to_string(i) +
                  " has dim " + std::to_string(out[i].size()) + ", expected " +
                  std::to_string(dim));
    }
    normalize(out[i]);
  }
  return out;
}

}  // namespace quarry
