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

// Uniform access to every model role over the chat-completions protocol.
//
// A ModelHandle carries the decoding parameters for one role together with
// the backend that serves it: an HTTP chat-completions endpoint or one of
// the deterministic mocks in mock_backends.h. The Gateway adds retries with
// exponential backoff, per-backend concurrency caps, think-block stripping
// and a call log with one entry per outward call.

#ifndef QUARRY_GATEWAY_H_
#define QUARRY_GATEWAY_H_

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "quarry/io.h"
#include "quarry/text.h"

namespace quarry {

enum class Role { kIdentifier, kMiner, kGenerator, kExtractor, kQuestionGen, kJudge };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  int n = 1;
};

struct ChatReply {
  std::vector<std::string> choices;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0.0;
};

// Raised by backends. `retryable` marks transport failures, rate limits
// and server errors; `retry_after_s` > 0 honors a server's Retry-After.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, bool retryable,
                 double retry_after_s = 0.0)
      : Error(what),
        status_(status),
        retryable_(retryable),
        retry_after_s_(retry_after_s) {}
  int status() const { return status_; }
  bool retryable() const { return retryable_; }
  double retry_after_s() const { return retry_after_s_; }

 private:
  int status_;
  bool retryable_;
  double retry_after_s_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatReply complete(const ChatRequest& request) = 0;
  virtual std::string describe() const = 0;
};

struct ModelHandle {
  Role role = Role::kGenerator;
  std::string endpoint;
  std::string model_name;
  double temperature = 0.0;
  int max_tokens = 512;
  bool strip_think_blocks = false;
  int retry_limit = 3;
  int parallelism_cap = 4;
  std::shared_ptr<ChatBackend> backend;

  // Role defaults: the miner is capped at 100 generated tokens.
  static ModelHandle defaults_for(Role role);
  // Throws Error when an invariant does not hold.
  void validate() const;
};

inline constexpr int kMinerMaxTokens = 100;
inline constexpr double kSamplingTemperature = 0.7;

// One outward call as seen by the gateway: retries are folded into a single
// record with an attempt count.
struct CallRecord {
  Role role = Role::kGenerator;
  std::string model;
  std::vector<ChatMessage> messages;
  int n = 1;
  std::vector<std::string> outputs;  // after think-block stripping
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0.0;
  int attempts = 0;
  std::string error;  // set when every attempt failed
};

Json to_json(const CallRecord& record);
CallRecord call_record_from_json(const Json& j);

class CallLog {
 public:
  void append(CallRecord record);
  std::size_t size() const;
  std::vector<CallRecord> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

// Removes every <think>...</think> span. An unmatched closing tag drops
// everything before it; an unmatched opening tag drops everything after it.
std::string strip_think_blocks(std::string_view text);

struct BackoffPolicy {
  std::chrono::milliseconds initial{500};
  std::chrono::milliseconds max{16000};
  std::function<void(std::chrono::milliseconds)> sleep;  // default: real sleep
};

class Gateway {
 public:
  explicit Gateway(BackoffPolicy backoff = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  struct Result {
    std::vector<std::string> texts;  // one per requested sample
    CallRecord record;
    const std::string& text() const { return texts.front(); }
  };

  // Sends `messages` with the handle's decoding parameters. Retryable
  // failures are retried up to handle.retry_limit times; the last error is
  // rethrown. Exactly one CallRecord is appended per call, failed or not.
  Result chat(const ModelHandle& handle, std::vector<ChatMessage> messages,
              int n = 1, double temperature = -1.0);

  // Single user-turn convenience.
  Result ask(const ModelHandle& handle, std::string prompt);

  // Miner completion of an insight fragment. n_samples > 1 switches to
  // sampled decoding. Returns exactly n_samples completions.
  Result complete_insight(const ModelHandle& miner, std::string_view fragment,
                          int n_samples);

  const CallLog& log() const { return log_; }

 private:
  class Slot;
  Slot& slot_for(const ModelHandle& handle);

  BackoffPolicy backoff_;
  CallLog log_;
  std::mutex slots_mu_;
  std::map<const ChatBackend*, std::unique_ptr<Slot>> slots_;
};

}  // namespace quarry

#endif  // QUARRY_GATEWAY_H_
