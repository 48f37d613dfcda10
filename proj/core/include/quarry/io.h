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

#ifndef QUARRY_IO_H_
#define QUARRY_IO_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace quarry {

using Json = nlohmann::json;

// Calls `fn(record, line_number)` for every non-blank line of a
// line-delimited JSON file. Line numbers are 1-based. Throws ParseError
// naming the line on malformed JSON, and Error if the file cannot be opened.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

std::string read_file(const std::filesystem::path& path);

// Writes via a temporary sibling file and rename, so readers never observe
// a partially written artifact.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Serializes one JSON value per line.
std::string to_jsonl(const std::vector<Json>& records);

// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

// Incremental SHA-256 for digests over several inputs.
class Digest {
 public:
  Digest();
  ~Digest();
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  // Each part is length-prefixed so ("ab","c") and ("a","bc") differ.
  Digest& add(std::string_view part);
  Digest& add_file(const std::filesystem::path& path);
  std::string hex();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions from
// fn are rethrown on the calling thread (the first one by index wins).
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace quarry

#endif  // QUARRY_IO_H_
