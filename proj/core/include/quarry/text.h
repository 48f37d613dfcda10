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

#ifndef QUARRY_TEXT_H_
#define QUARRY_TEXT_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace quarry {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (file records, model output that cannot be parsed).
class ParseError : public Error {
 public:
  using Error::Error;
};

// ASCII lower-casing; bytes outside ASCII are left untouched.
std::string fold_case(std::string_view s);

// Collapses runs of whitespace into a single space and trims both ends.
std::string collapse_whitespace(std::string_view s);

std::string_view trim(std::string_view s);

// fold_case + collapse_whitespace.
std::string fold_and_collapse(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

// Whitespace token count, the token approximation used across the project
// for document lengths, context budgets and mock completions.
std::size_t count_tokens(std::string_view s);

// Keeps at most `max_tokens` whitespace tokens of `s`, joined by single
// spaces. Text already within budget is returned unchanged.
std::string truncate_tokens(std::string_view s, std::size_t max_tokens);

// Case-insensitive count of non-overlapping occurrences of `needle`.
// An empty needle has zero occurrences.
std::size_t count_occurrences_ci(std::string_view haystack,
                                 std::string_view needle);

bool contains_ci(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace quarry

#endif  // QUARRY_TEXT_H_
