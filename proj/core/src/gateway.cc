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

#include "quarry/gateway.h"

#include <algorithm>
#include <array>
#include <condition_variable>
#include <thread>
#include <utility>

#include <spdlog/spdlog.h>

namespace quarry {
namespace {

constexpr std::array<std::pair<Role, std::string_view>, 6> kRoleNames = {{
    {Role::kIdentifier, "identifier"},
    {Role::kMiner, "miner"},
    {Role::kGenerator, "generator"},
    {Role::kExtractor, "extractor"},
    {Role::kQuestionGen, "qgen"},
    {Role::kJudge, "judge"},
}};

}  // namespace

std::string_view role_name(Role role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  for (const auto& [r, n] : kRoleNames) {
    if (n == name) return r;
  }
  throw Error("unknown model role \"" + std::string(name) + "\"");
}

ModelHandle ModelHandle::defaults_for(Role role) {
  ModelHandle h;
  h.role = role;
  if (role == Role::kMiner) h.max_tokens = kMinerMaxTokens;
  return h;
}

void ModelHandle::validate() const {
  const std::string who(role_name(role));
  if (max_tokens <= 0) throw Error(who + ": max_tokens must be positive");
  if (retry_limit < 0) throw Error(who + ": retry_limit must be >= 0");
  if (parallelism_cap < 1) throw Error(who + ": parallelism_cap must be >= 1");
  if (!backend) throw Error(who + ": no backend configured");
}

Json to_json(const CallRecord& r) {
  Json messages = Json::array();
  for (const auto& m : r.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  Json j = {{"role", role_name(r.role)},
            {"model", r.model},
            {"messages", std::move(messages)},
            {"n", r.n},
            {"outputs", r.outputs},
            {"prompt_tokens", r.prompt_tokens},
            {"completion_tokens", r.completion_tokens},
            {"latency_ms", r.latency_ms},
            {"attempts", r.attempts}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

CallRecord call_record_from_json(const Json& j) {
  CallRecord r;
  r.role = parse_role(j.at("role").get<std::string>());
  r.model = j.value("model", std::string());
  for (const auto& m : j.at("messages")) {
    r.messages.push_back({m.at("role").get<std::string>(),
                          m.at("content").get<std::string>()});
  }
  r.n = j.value("n", 1);
  r.outputs = j.at("outputs").get<std::vector<std::string>>();
  r.prompt_tokens = j.value("prompt_tokens", 0L);
  r.completion_tokens = j.value("completion_tokens", 0L);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.attempts = j.value("attempts", 1);
  r.error = j.value("error", std::string());
  return r;
}

void CallLog::append(CallRecord record) {
  std::lock_guard<std::mutex> lock(mu_);
  records_.push_back(std::move(record));
}

std::size_t CallLog::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_.size();
}

std::vector<CallRecord> CallLog::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

std::string strip_think_blocks(std::string_view text) {
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::string_view kClose = "</think>";
  std::string out;
  std::size_t pos = 0;
  // Output that starts mid-thought (opening tag in the chat template).
  const std::size_t first_open = text.find(kOpen);
  const std::size_t first_close = text.find(kClose);
  if (first_close != std::string_view::npos &&
      (first_open == std::string_view::npos || first_close < first_open)) {
    pos = first_close + kClose.size();
  }
  while (pos < text.size()) {
    const std::size_t open = text.find(kOpen, pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    const std::size_t close = text.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) break;
    pos = close + kClose.size();
  }
  return std::string(trim(out));
}

// Bounds in-flight requests per backend.
class Gateway::Slot {
 public:
  explicit Slot(int cap) : free_(cap) {}
  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

Gateway::Gateway(BackoffPolicy backoff) : backoff_(std::move(backoff)) {
  if (!backoff_.sleep) {
    backoff_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

Gateway::~Gateway() = default;

Gateway::Slot& Gateway::slot_for(const ModelHandle& handle) {
  std::lock_guard<std::mutex> lock(slots_mu_);
  auto& slot = slots_[handle.backend.get()];
  if (!slot) slot = std::make_unique<Slot>(handle.parallelism_cap);
  return *slot;
}

Gateway::Result Gateway::chat(const ModelHandle& handle,
                              std::vector<ChatMessage> messages, int n,
                              double temperature) {
  handle.validate();
  if (n < 1) throw Error("chat: n must be >= 1");
  ChatRequest request;
  request.model = handle.model_name;
  request.messages = std::move(messages);
  request.temperature = temperature >= 0.0 ? temperature : handle.temperature;
  request.max_tokens = handle.max_tokens;
  request.n = n;

  CallRecord record;
  record.role = handle.role;
  record.model = handle.model_name;
  record.messages = request.messages;
  record.n = n;

  Slot& slot = slot_for(handle);
  auto delay = backoff_.initial;
  for (int attempt = 0;; ++attempt) {
    record.attempts = attempt + 1;
    try {
      slot.acquire();
      ChatReply reply;
      try {
        reply = handle.backend->complete(request);
      } catch (...) {
        slot.release();
        throw;
      }
      slot.release();
      // Servers that ignore `n` return fewer choices; top up sequentially.
      while (static_cast<int>(reply.choices.size()) < n) {
        ChatRequest more = request;
        more.n = n - static_cast<int>(reply.choices.size());
        slot.acquire();
        ChatReply extra;
        try {
          extra = handle.backend->complete(more);
        } catch (...) {
          slot.release();
          throw;
        }
        slot.release();
        if (extra.choices.empty()) {
          throw TransportError("backend returned no choices", 0, true);
        }
        reply.choices.insert(reply.choices.end(), extra.choices.begin(),
                             extra.choices.end());
        reply.prompt_tokens += extra.prompt_tokens;
        reply.completion_tokens += extra.completion_tokens;
        reply.latency_ms += extra.latency_ms;
      }
      reply.choices.resize(static_cast<std::size_t>(n));
      for (auto& c : reply.choices) {
        if (handle.strip_think_blocks) c = strip_think_blocks(c);
      }
      record.outputs = reply.choices;
      record.prompt_tokens = reply.prompt_tokens;
      record.completion_tokens = reply.completion_tokens;
      record.latency_ms += reply.latency_ms;
      log_.append(record);
      return Result{std::move(reply.choices), std::move(record)};
    } catch (const TransportError& e) {
      const bool can_retry = e.retryable() && attempt < handle.retry_limit;
      if (!can_retry) {
        record.error = e.what();
        log_.append(record);
        throw;
      }
      auto wait = delay;
      if (e.retry_after_s() > 0) {
        wait = std::max(wait, std::chrono::milliseconds(static_cast<long>(
                                  e.retry_after_s() * 1000.0)));
      }
      spdlog::warn("{} call failed ({}); retry {}/{} in {} ms",
                   role_name(handle.role), e.what(), attempt + 1,
                   handle.retry_limit, wait.count());
      backoff_.sleep(wait);
      delay = std::min(delay * 2, backoff_.max);
    } catch (const std::exception& e) {
      record.error = e.what();
      log_.append(record);
      throw;
    }
  }
}

Gateway::Result Gateway::ask(const ModelHandle& handle, std::string prompt) {
  return chat(handle, {{"user", std::move(prompt)}});
}

Gateway::Result Gateway::complete_insight(const ModelHandle& miner,
                                          std::string_view fragment,
                                          int n_samples) {
  if (trim(fragment).empty()) throw Error("complete_insight: empty fragment");
  if (n_samples < 1) throw Error("complete_insight: n_samples must be >= 1");
  const double temperature = n_samples > 1 ? kSamplingTemperature : -1.0;
  return chat(miner, {{"user", std::string(fragment)}}, n_samples, temperature);
}

}  // namespace quarry
