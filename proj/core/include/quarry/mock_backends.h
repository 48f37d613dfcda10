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

// Deterministic offline backends. Every mock answers from the request
// content alone, so outputs are identical across runs and thread schedules.
// Replies are truncated to the request's max_tokens (whitespace tokens),
// token usage is counted the same way and latency is reported as zero.

#ifndef QUARRY_MOCK_BACKENDS_H_
#define QUARRY_MOCK_BACKENDS_H_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "quarry/gateway.h"

namespace quarry {

// Lookup table from insight fragment (or any key text) to completion.
// Keys match exactly after case folding and whitespace collapsing.
// Multi-valued entries are joined with "; ".
class MockKB {
 public:
  void add(std::string_view key, std::string completion);
  void add(std::string_view key, const std::vector<std::string>& completions);
  // Returns "" for unknown keys.
  std::string lookup(std::string_view key) const;
  std::size_t size() const { return table_.size(); }

  // {"key": "completion" | ["c1", "c2"], ...}
  static MockKB from_json(const Json& j);
  static MockKB load(const std::filesystem::path& path);
  Json to_json() const;

 private:
  std::map<std::string, std::string> table_;
};

using Responder = std::function<std::string(const ChatRequest&)>;

class MockBackend : public ChatBackend {
 public:
  MockBackend(std::string name, Responder responder);
  ChatReply complete(const ChatRequest& request) override;
  std::string describe() const override { return "mock:" + name_; }

 private:
  std::string name_;
  Responder responder_;
};

// Last user message of a request ("" if none).
std::string last_user_message(const ChatRequest& request);

std::shared_ptr<ChatBackend> make_canned_backend(std::string reply);

// Looks up the text after the last occurrence of `key_after` in the last
// user message (the whole message when `key_after` is empty). Unknown keys
// answer `fallback`.
std::shared_ptr<ChatBackend> make_kb_backend(MockKB kb,
                                             std::string key_after = {},
                                             std::string fallback = {});

// Generator that answers from the prompt's "Context:" block: for every
// "fragment → completion" line it collects the completion, returning the
// distinct ones joined with "; ". Without such lines it answers "".
std::shared_ptr<ChatBackend> make_extractive_backend();

// Question generator that fills the qgen prompt's Subject/Relation/Answer
// type fields into "What does S V?" (single) or "What are the things S R?"
// (multiple), where V is the relation's first word without a trailing "s".
std::shared_ptr<ChatBackend> make_template_qgen_backend();

// Matching judge: answers {"explanation": ..., "answer": "Yes"} when the
// text between "Paper-A:" and "Paper-B:" shares a word of at least
// `min_length` letters with the text after "Paper-B:" (which includes any
// appended context or insights), otherwise "No".
std::shared_ptr<ChatBackend> make_lexical_matching_backend(std::size_t min_length = 10);

struct MockRoute {
  std::string contains;  // substring of the last user message
  std::shared_ptr<ChatBackend> backend;
};

// Dispatches to the first route whose substring occurs in the last user
// message, else to `fallback`.
std::shared_ptr<ChatBackend> make_router_backend(std::vector<MockRoute> routes,
                                                 std::shared_ptr<ChatBackend> fallback);

// Builds a mock from a config object:
//   {"kind": "canned", "reply": str}
//   {"kind": "kb", "table": {...} | "path": str, "key_after": str,
//    "default": str}
//   {"kind": "extractive"}
//   {"kind": "qgen_template"}
//   {"kind": "lexical_matching", "min_length": int}
//   {"kind": "router", "routes": [{"contains": str, "mock": {...}}],
//    "default": {...}}
// Relative paths resolve against `base_dir`.
std::shared_ptr<ChatBackend> make_mock_backend(
    const Json& config, const std::filesystem::path& base_dir = {});

}  // namespace quarry

#endif  // QUARRY_MOCK_BACKENDS_H_
