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

// Prompt templates. Templates are plain text with positional "{}" slots;
// other braces are literal. The defaults ship in core/prompts/ and are
// compiled in; a prompt directory can override any subset of them.

#ifndef QUARRY_PROMPTS_H_
#define QUARRY_PROMPTS_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace quarry {

enum class PromptKind {
  kIdentifier,         // insight identification
  kQa,                 // plain question answering
  kAugmentedQa,        // question answering with context
  kMatching,           // paper matching
  kAugmentedMatching,  // paper matching with insights
  kInsightEval,        // identified-insight similarity judge
  kExtract,            // triple extraction
  kQuestionGen,        // triple-to-question conversion
};

inline constexpr std::size_t kPromptKindCount = 8;

// File stem of each template, e.g. "augmented_qa".
std::string_view prompt_file_stem(PromptKind kind);

class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string text);

  const std::string& text() const { return text_; }
  std::size_t slot_count() const { return slots_.size(); }

  // Fills the slots in order. Substituted text is never rescanned. Throws
  // Error when the argument count differs from the slot count.
  std::string render(const std::vector<std::string_view>& args) const;

 private:
  std::string text_;
  std::vector<std::size_t> slots_;  // byte offsets of "{}"
};

class PromptLibrary {
 public:
  // Compiled-in defaults.
  static PromptLibrary defaults();
  // Defaults overridden by `<dir>/<stem>.txt` for every file present.
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(PromptKind kind) const;
  void set(PromptKind kind, std::string text);

 private:
  std::array<PromptTemplate, kPromptKindCount> templates_;
};

}  // namespace quarry

#endif  // QUARRY_PROMPTS_H_
