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

// Chat-completions and embeddings over HTTP.
//
// Endpoints are base URLs such as "https://api.example.com/v1"; requests go
// to "<base>/chat/completions" and "<base>/embeddings". The bearer token,
// when present, is read from an environment variable.

#ifndef QUARRY_HTTP_BACKEND_H_
#define QUARRY_HTTP_BACKEND_H_

#include <chrono>
#include <string>

#include "quarry/gateway.h"

namespace quarry {

struct HttpEndpoint {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/v1"
};

// Throws Error for URLs without an http or https scheme.
HttpEndpoint parse_endpoint(const std::string& url);

// POSTs a JSON body and returns the parsed JSON response. Connection
// failures, 408, 429 and 5xx raise a retryable TransportError (429/503 carry
// Retry-After); other non-2xx statuses raise a non-retryable one.
Json http_post_json(const HttpEndpoint& endpoint, const std::string& path,
                    const Json& body, const std::string& api_key,
                    std::chrono::seconds timeout);

// Reads the token from `env_var`; "" when unset.
std::string api_key_from_env(const std::string& env_var);

class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string endpoint, std::string api_key,
                  std::chrono::seconds timeout = std::chrono::seconds(120));
  ChatReply complete(const ChatRequest& request) override;
  std::string describe() const override { return "http:" + url_; }

 private:
  std::string url_;
  HttpEndpoint endpoint_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

// Request body in the chat-completions wire format.
Json chat_request_to_json(const ChatRequest& request);

// Parses a chat-completions response body. Throws TransportError
// (non-retryable) when no choices are present.
ChatReply chat_reply_from_json(const Json& body);

}  // namespace quarry

#endif  // QUARRY_HTTP_BACKEND_H_
