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

#include "quarry/mock_backends.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include "quarry/text.h"

namespace quarry {

void MockKB::add(std::string_view key, std::string completion) {
  table_[fold_and_collapse(key)] = std::move(completion);
}

void MockKB::add(std::string_view key,
                 const std::vector<std::string>& completions) {
  add(key, join(completions, "; "));
}

std::string MockKB::lookup(std::string_view key) const {
  auto it = table_.find(fold_and_collapse(key));
  return it == table_.end() ? std::string() : it->second;
}

MockKB MockKB::from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("mock table must be a JSON object");
  MockKB kb;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      kb.add(key, value.get<std::string>());
    } else if (value.is_array()) {
      kb.add(key, value.get<std::vector<std::string>>());
    } else {
      throw ParseError("mock table entry \"" + key +
                       "\" must be a string or a list of strings");
    }
  }
  return kb;
}

MockKB MockKB::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(read_file(path)));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Json MockKB::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : table_) j[k] = v;
  return j;
}

MockBackend::MockBackend(std::string name, Responder responder)
    : name_(std::move(name)), responder_(std::move(responder)) {}

ChatReply MockBackend::complete(const ChatRequest& request) {
  ChatReply reply;
  std::string text = truncate_tokens(
      responder_(request), static_cast<std::size_t>(std::max(request.max_tokens, 0)));
  for (const auto& m : request.messages) {
    reply.prompt_tokens += static_cast<long>(count_tokens(m.content));
  }
  reply.completion_tokens =
      static_cast<long>(count_tokens(text)) * std::max(request.n, 1);
  reply.choices.assign(static_cast<std::size_t>(std::max(request.n, 1)), text);
  reply.latency_ms = 0.0;
  return reply;
}

std::string last_user_message(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return {};
}

namespace {

std::string first_user_message(const ChatRequest& request) {
  for (const auto& m : request.messages) {
    if (m.role == "user") return m.content;
  }
  return {};
}

// Value of a "Label: value" line, or "".
std::string field_value(std::string_view text, std::string_view label) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (starts_with(line, label)) {
      return std::string(trim(line.substr(label.size())));
    }
    pos = end + 1;
  }
  return {};
}

}  // namespace

std::shared_ptr<ChatBackend> make_canned_backend(std::string reply) {
  return std::make_shared<MockBackend>(
      "canned", [reply = std::move(reply)](const ChatRequest&) { return reply; });
}

std::shared_ptr<ChatBackend> make_kb_backend(MockKB kb, std::string key_after,
                                             std::string fallback) {
  return std::make_shared<MockBackend>(
      "kb", [kb = std::move(kb), key_after = std::move(key_after),
             fallback = std::move(fallback)](const ChatRequest& request) {
        std::string message = last_user_message(request);
        std::string_view key = message;
        if (!key_after.empty()) {
          const std::size_t pos = message.rfind(key_after);
          if (pos == std::string::npos) return fallback;
          key = std::string_view(message).substr(pos + key_after.size());
        }
        std::string found = kb.lookup(key);
        return found.empty() ? fallback : found;
      });
}

namespace {

std::set<std::string> long_words(std::string_view text, std::size_t min_length) {
  std::set<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= min_length) out.insert(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace

std::shared_ptr<ChatBackend> make_lexical_matching_backend(std::size_t min_length) {
  return std::make_shared<MockBackend>("lexical_matching", [min_length](
                                                                const ChatRequest& request) {
    // The first user message holds the papers; reprompts come later.
    std::string prompt;
    for (const auto& m : request.messages) {
      if (m.role == "user") {
        prompt = m.content;
        break;
      }
    }
    const std::size_t a = prompt.find("Paper-A:\n");
    const std::size_t b = prompt.find("Paper-B:\n", a == std::string::npos ? 0 : a);
    if (a == std::string::npos || b == std::string::npos) {
      return std::string("{\"explanation\": \"no papers found\", \"answer\": \"No\"}");
    }
    const auto left = long_words(std::string_view(prompt).substr(a, b - a), min_length);
    const auto right = long_words(std::string_view(prompt).substr(b), min_length);
    std::string shared;
    for (const auto& w : left) {
      if (right.count(w)) {
        shared = w;
        break;
      }
    }
    Json reply = {{"explanation", shared.empty() ? "no shared concept"
                                                 : "both papers mention " + shared},
                  {"answer", shared.empty() ? "No" : "Yes"}};
    return reply.dump();
  });
}

std::shared_ptr<ChatBackend> make_router_backend(std::vector<MockRoute> routes,
                                                 std::shared_ptr<ChatBackend> fallback) {
  class Router : public ChatBackend {
   public:
    Router(std::vector<MockRoute> routes, std::shared_ptr<ChatBackend> fallback)
        : routes_(std::move(routes)), fallback_(std::move(fallback)) {}
    ChatReply complete(const ChatRequest& request) override {
      const std::string message = last_user_message(request);
      for (const auto& r : routes_) {
        if (message.find(r.contains) != std::string::npos) return r.backend->complete(request);
      }
      if (!fallback_) throw Error("router mock: no route matches the request");
      return fallback_->complete(request);
    }
    std::string describe() const override { return "mock:router"; }

   private:
    std::vector<MockRoute> routes_;
    std::shared_ptr<ChatBackend> fallback_;
  };
  return std::make_shared<Router>(std::move(routes), std::move(fallback));
}

std::shared_ptr<ChatBackend> make_extractive_backend() {
  return std::make_shared<MockBackend>("extractive", [](const ChatRequest& request) {
    static constexpr std::string_view kArrow = " → ";
    const std::string prompt = last_user_message(request);
    const std::size_t ctx = prompt.rfind("Context:");
    if (ctx == std::string::npos) return std::string();
    std::vector<std::string> answers;
    std::string_view rest = std::string_view(prompt).substr(ctx);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t end = rest.find('\n', pos);
      if (end == std::string_view::npos) end = rest.size();
      std::string_view line = rest.substr(pos, end - pos);
      if (auto arrow = line.find(kArrow); arrow != std::string_view::npos) {
        std::string answer(trim(line.substr(arrow + kArrow.size())));
        if (!answer.empty() &&
            std::find(answers.begin(), answers.end(), answer) == answers.end()) {
          answers.push_back(std::move(answer));
        }
      }
      pos = end + 1;
    }
    return join(answers, "; ");
  });
}

std::shared_ptr<ChatBackend> make_template_qgen_backend() {
  return std::make_shared<MockBackend>("qgen_template", [](const ChatRequest& request) {
    const std::string prompt = first_user_message(request);
    const std::string subject = field_value(prompt, "Subject:");
    const std::string relation = field_value(prompt, "Relation:");
    const bool multiple =
        contains_ci(field_value(prompt, "Answer type:"), "multiple");
    if (subject.empty() || relation.empty()) return std::string();
    if (multiple) return "What are the things " + subject + " " + relation + "?";
    auto words = split_whitespace(relation);
    std::string& verb = words.front();
    if (verb.size() > 2 && verb.back() == 's' && verb[verb.size() - 2] != 's') {
      verb.pop_back();
    }
    return "What does " + subject + " " + join(words, " ") + "?";
  });
}

std::shared_ptr<ChatBackend> make_mock_backend(
    const Json& config, const std::filesystem::path& base_dir) {
  const std::string kind = config.value("kind", std::string());
  if (kind == "canned") {
    return make_canned_backend(config.value("reply", std::string()));
  }
  if (kind == "kb") {
    MockKB kb;
    if (auto it = config.find("table"); it != config.end()) {
      kb = MockKB::from_json(*it);
    } else if (auto p = config.find("path"); p != config.end()) {
      std::filesystem::path path = p->get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      kb = MockKB::load(path);
    } else {
      throw Error("mock kb needs \"table\" or \"path\"");
    }
    return make_kb_backend(std::move(kb), config.value("key_after", std::string()),
                           config.value("default", std::string()));
  }
  if (kind == "lexical_matching") {
    return make_lexical_matching_backend(config.value("min_length", std::size_t{10}));
  }
  if (kind == "router") {
    std::vector<MockRoute> routes;
    for (const auto& r : config.value("routes", Json::array())) {
      routes.push_back({r.at("contains").get<std::string>(),
                        make_mock_backend(r.at("mock"), base_dir)});
    }
    std::shared_ptr<ChatBackend> fallback;
    if (auto d = config.find("default"); d != config.end()) {
      fallback = make_mock_backend(*d, base_dir);
    }
    return make_router_backend(std::move(routes), std::move(fallback));
  }
  if (kind == "extractive") return make_extractive_backend();
  if (kind == "qgen_template") return make_template_qgen_backend();
  throw Error("unknown mock kind \"" + kind + "\"");
}

}  // namespace quarry
