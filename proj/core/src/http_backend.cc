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

#include "quarry/http_backend.h"

#include <cstdlib>
#include <utility>

#include <httplib.h>

namespace quarry {

HttpEndpoint parse_endpoint(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("endpoint \"" + url + "\" has no scheme");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error("endpoint \"" + url + "\" must use http or https");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  HttpEndpoint ep;
  if (path_start == std::string::npos) {
    ep.origin = url;
  } else {
    ep.origin = url.substr(0, path_start);
    ep.path_prefix = url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') {
      ep.path_prefix.pop_back();
    }
  }
  return ep;
}

std::string api_key_from_env(const std::string& env_var) {
  if (env_var.empty()) return {};
  const char* v = std::getenv(env_var.c_str());
  return v == nullptr ? std::string() : std::string(v);
}

Json http_post_json(const HttpEndpoint& endpoint, const std::string& path,
                    const Json& body, const std::string& api_key,
                    std::chrono::seconds timeout) {
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  const std::string target = endpoint.path_prefix + path;
  auto res = client.Post(target, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint.origin + target + ": " +
                             httplib::to_string(res.error()),
                         0, true);
  }
  const int status = res->status;
  if (status < 200 || status >= 300) {
    const bool retryable = status == 408 || status == 429 || status >= 500;
    double retry_after = 0.0;
    if (res->has_header("Retry-After")) {
      retry_after = std::atof(res->get_header_value("Retry-After").c_str());
    }
    throw TransportError("POST " + endpoint.origin + target + ": HTTP " +
                             std::to_string(status) + ": " +
                             res->body.substr(0, 200),
                         status, retryable, retry_after);
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw TransportError(std::string("unparseable response body: ") + e.what(),
                         status, false);
  }
}

Json chat_request_to_json(const ChatRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  Json body = {{"model", request.model},
               {"messages", std::move(messages)},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  if (request.n > 1) body["n"] = request.n;
  return body;
}

ChatReply chat_reply_from_json(const Json& body) {
  ChatReply reply;
  const auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) {
    throw TransportError("response has no choices", 200, false);
  }
  for (const auto& c : *choices) {
    std::string text;
    if (auto m = c.find("message"); m != c.end() && m->contains("content") &&
                                    (*m)["content"].is_string()) {
      text = (*m)["content"].get<std::string>();
    } else if (auto t = c.find("text"); t != c.end() && t->is_string()) {
      text = t->get<std::string>();
    }
    reply.choices.push_back(std::move(text));
  }
  if (auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
    reply.prompt_tokens = usage->value("prompt_tokens", 0L);
    reply.completion_tokens = usage->value("completion_tokens", 0L);
  }
  return reply;
}

HttpChatBackend::HttpChatBackend(std::string endpoint, std::string api_key,
                                 std::chrono::seconds timeout)
    : url_(std::move(endpoint)),
      endpoint_(parse_endpoint(url_)),
      api_key_(std::move(api_key)),
      timeout_(timeout) {}

ChatReply HttpChatBackend::complete(const ChatRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  Json body = http_post_json(endpoint_, "/chat/completions",
                             chat_request_to_json(request), api_key_, timeout_);
  ChatReply reply = chat_reply_from_json(body);
  reply.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return reply;
}

}  // namespace quarry
