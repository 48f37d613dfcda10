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

#ifndef QUARRY_TESTS_ORACLES_H_
#define QUARRY_TESTS_ORACLES_H_

// Brute-force reference implementations, written from the metric
// definitions without reusing library code.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace quarry::oracle {

// Full sort over every entry by (score desc, id asc).
inline std::vector<std::pair<std::string, double>> exhaustive_scan(
    const std::vector<std::pair<std::string, std::vector<float>>>& unit_entries,
    const std::vector<float>& unit_query, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& [id, v] : unit_entries) {
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dot += static_cast<double>(v[i]) * static_cast<double>(unit_query[i]);
    }
    all.emplace_back(id, dot);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second > b.second || (a.second == b.second && a.first < b.first);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

inline double raw_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct RankOracle {
  std::map<std::size_t, double> hits;
  double mrr = 0.0;
  std::size_t count = 0;
};

// Averages per-gold reciprocal rank and hits within an item, then over
// items. `ranking` is truncated at k_max.
inline void add_item(RankOracle& acc, const std::vector<std::string>& gold_docs,
                     const std::vector<std::string>& ranking, std::size_t k_max,
                     const std::vector<std::size_t>& ks) {
  double rr = 0.0;
  std::map<std::size_t, double> hit;
  for (std::size_t k : ks) hit[k] = 0.0;
  for (const auto& g : gold_docs) {
    std::size_t rank = 0;
    for (std::size_t r = 0; r < ranking.size() && r < k_max; ++r) {
      if (ranking[r] == g) {
        rank = r + 1;
        break;
      }
    }
    if (rank > 0) rr += 1.0 / static_cast<double>(rank);
    for (std::size_t k : ks) {
      if (rank > 0 && rank <= k) hit[k] += 1.0;
    }
  }
  const double n = static_cast<double>(gold_docs.size());
  acc.mrr += rr / n;
  for (std::size_t k : ks) acc.hits[k] += hit[k] / n;
  ++acc.count;
}

inline void finish(RankOracle& acc) {
  if (acc.count == 0) return;
  acc.mrr /= static_cast<double>(acc.count);
  for (auto& [k, h] : acc.hits) h /= static_cast<double>(acc.count);
}

struct ZOracleRow {
  std::string word;
  std::size_t n;
  double p_hat;
  double z;
};

// Regex tokenization and direct counting per word.
inline std::vector<ZOracleRow> z_scores(const std::vector<std::pair<std::string, int>>& samples,
                                        std::size_t min_count) {
  const std::regex word_re("[A-Za-z]+");
  std::vector<std::set<std::string>> words_of;
  std::set<std::string> vocab;
  for (const auto& [text, label] : samples) {
    std::set<std::string> ws;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), word_re);
         it != std::sregex_iterator(); ++it) {
      std::string w = it->str();
      for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      ws.insert(w);
    }
    vocab.insert(ws.begin(), ws.end());
    words_of.push_back(std::move(ws));
  }
  double ones = 0.0;
  for (const auto& s : samples) ones += s.second;
  const double p0 = ones / static_cast<double>(samples.size());
  std::vector<ZOracleRow> rows;
  for (const auto& w : vocab) {
    std::size_t n = 0, pos = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (words_of[i].count(w)) {
        ++n;
        pos += static_cast<std::size_t>(samples[i].second);
      }
    }
    if (n < min_count) continue;
    const double p_hat = static_cast<double>(pos) / static_cast<double>(n);
    rows.push_back({w, n, p_hat, (p_hat - p0) / std::sqrt(p0 * (1 - p0) / static_cast<double>(n))});
  }
  return rows;
}

}  // namespace quarry::oracle

#endif  // QUARRY_TESTS_ORACLES_H_
