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

#include "quarry/prompts.h"

#include <map>
#include <utility>

#include "quarry/io.h"
#include "quarry/text.h"

namespace quarry {
namespace internal {
const std::map<std::string, std::string>& default_prompt_texts();
}  // namespace internal

namespace {

constexpr std::array<std::string_view, kPromptKindCount> kStems = {
    "identifier", "qa",           "augmented_qa", "matching",
    "augmented_matching", "insight_eval", "extract",  "question_gen"};

}  // namespace

std::string_view prompt_file_stem(PromptKind kind) {
  return kStems[static_cast<std::size_t>(kind)];
}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  for (std::size_t pos = text_.find("{}"); pos != std::string::npos;
       pos = text_.find("{}", pos + 2)) {
    slots_.push_back(pos);
  }
}

std::string PromptTemplate::render(
    const std::vector<std::string_view>& args) const {
  if (args.size() != slots_.size()) {
    throw Error("prompt expects " + std::to_string(slots_.size()) +
                " argument(s), got " + std::to_string(args.size()));
  }
  std::string out;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    out.append(text_, prev, slots_[i] - prev);
    out.append(args[i]);
    prev = slots_[i] + 2;
  }
  out.append(text_, prev, std::string::npos);
  return out;
}

PromptLibrary PromptLibrary::defaults() {
  PromptLibrary lib;
  const auto& texts = internal::default_prompt_texts();
  for (std::size_t i = 0; i < kPromptKindCount; ++i) {
    const auto kind = static_cast<PromptKind>(i);
    lib.set(kind, texts.at(std::string(prompt_file_stem(kind))));
  }
  return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("prompt directory " + dir.string() + " does not exist");
  }
  PromptLibrary lib = defaults();
  for (std::size_t i = 0; i < kPromptKindCount; ++i) {
    const auto kind = static_cast<PromptKind>(i);
    auto path = dir / (std::string(prompt_file_stem(kind)) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    const std::size_t expected = lib.get(kind).slot_count();
    lib.set(kind, read_file(path));
    if (lib.get(kind).slot_count() != expected) {
      throw Error(path.string() + ": expected " + std::to_string(expected) +
                  " \"{}\" slot(s), found " +
                  std::to_string(lib.get(kind).slot_count()));
    }
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(PromptKind kind) const {
  return templates_[static_cast<std::size_t>(kind)];
}

void PromptLibrary::set(PromptKind kind, std::string text) {
  templates_[static_cast<std::size_t>(kind)] = PromptTemplate(std::move(text));
}

}  // namespace quarry
