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

// Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "oracles.h"
#include "quarry/benchbuild.h"
#include "quarry/corpus.h"
#include "quarry/embedding.h"
#include "quarry/evalkit.h"
#include "quarry/io.h"
#include "quarry/prompts.h"
#include "quarry/retrieval.h"
#include "quarry/triples.h"
#include "test_support.h"

namespace quarry::acceptance {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Verdict {
  enum Kind { kPass, kFail, kSkip } kind = kPass;
  std::string detail;
};

Verdict pass(std::string d) { return {Verdict::kPass, std::move(d)}; }
Verdict fail(std::string d) { return {Verdict::kFail, std::move(d)}; }

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = cli::run_cli(args, out, err);
  if (status != 0) std::cerr << "  quarry " << args.front() << ": " << err.str();
  return status;
}

bool chain(const fs::path& config, bool with_report) {
  std::vector<std::vector<std::string>> steps = {
      {"ingest"}, {"extract"}, {"build-bench"}, {"index", "build"}, {"run"}, {"eval"}};
  if (with_report) steps.push_back({"report"});
  for (auto args : steps) {
    args.insert(args.begin(), {"-c", config.string()});
    if (cli(args) != 0) return false;
  }
  return true;
}

bool synth(const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"synth", "--out", dir.string(), "--documents", "200"};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args) == 0;
}

// Insight EM over deep items, recomputed from the run records.
struct InsightScore {
  double em = 0.0;
  std::size_t deep = 0;
  std::size_t failed = 0;
};

InsightScore insight_deep_em(const fs::path& work) {
  const auto bench = load_benchmark(work / "benchmark.jsonl");
  std::map<std::string, const BenchmarkItem*> by_id;
  for (const auto& it : bench) by_id[it.id] = &it;
  InsightScore s;
  for (const auto& r : load_run_records(work / "runs.jsonl")) {
    if (r.pipeline != Pipeline::kInsight) continue;
    const BenchmarkItem* item = by_id.at(r.item_id);
    if (item->kind != ItemKind::kDeep) continue;
    ++s.deep;
    if (!r.error.empty()) {
      ++s.failed;
      continue;
    }
    s.em += exact_match(item->golds, r.parsed_answer);
  }
  if (s.deep) s.em /= static_cast<double>(s.deep);
  return s;
}

Verdict oracle_end_to_end() {
  TempDir good, bad;
  const auto start = std::chrono::steady_clock::now();
  if (!synth(good.path()) || !chain(good / "config.json", false)) return fail("oracle chain failed");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const InsightScore ok = insight_deep_em(good / "work");

  if (!synth(bad.path(), {"--corrupt-miner"}) || !chain(bad / "config.json", false)) {
    return fail("corrupted chain failed");
  }
  const InsightScore broken = insight_deep_em(bad / "work");
  const std::string detail = "deep=" + std::to_string(ok.deep) + " EM=" + fmt(ok.em) +
                             ", corrupted EM=" + fmt(broken.em) + ", " + fmt(seconds, 2) + " s";
  const bool good_run = ok.deep > 0 && ok.failed == 0 && ok.em == 1.0;
  const bool bad_run = broken.deep == ok.deep && broken.em == 0.0;
  return good_run && bad_run && seconds < 10.0 ? pass(detail) : fail(detail);
}

// Case-insensitive non-overlapping occurrence count, written independently.
std::size_t occurrences(const std::string& hay, const std::string& needle) {
  if (needle.empty()) return 0;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  const std::string h = lower(hay), n = lower(needle);
  std::size_t count = 0;
  for (std::size_t pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + n.size())) {
    ++count;
  }
  return count;
}

Verdict filter_soundness() {
  std::mt19937_64 rng(4242);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "graph",
                                          "net",   "model", "parser", "beta net", "gamma ray"};
  const std::vector<std::string> rels = {"uses", "improves", "extends"};
  std::size_t violations = 0, deep_seen = 0, multi_seen = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Document> docs;
    const std::size_t n_docs = 1 + rng() % 6;
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::string text;
      for (std::size_t w = 0; w < 3 + rng() % 10; ++w) {
        std::string word = words[rng() % words.size()];
        if (rng() % 3 == 0) word[0] = static_cast<char>(std::toupper(word[0]));
        text += word + (rng() % 4 == 0 ? ". " : " ");
      }
      docs.push_back({"d" + std::to_string(d), "", text, {}, 0});
    }
    const Corpus corpus = Corpus::from_documents(docs);
    std::set<std::tuple<std::string, std::string, std::string, std::string>> unique;
    for (std::size_t t = 0; t < 1 + rng() % 12; ++t) {
      unique.emplace(words[rng() % words.size()], rels[rng() % rels.size()],
                     words[rng() % words.size()], "d" + std::to_string(rng() % n_docs));
    }
    std::vector<Triple> triples;
    for (const auto& [s, r, o, d] : unique) triples.push_back({s, r, o, d});
    const TripleIndex index = index_triples(triples);

    for (const auto& item : filter_deep_insight(index, corpus)) {
      ++deep_seen;
      const auto& st = item.source_triples.at(0);
      std::size_t same_key = 0;
      for (const auto& t : triples) same_key += t.subject == st.subject && t.relation == st.relation;
      const std::string& abstract = corpus.documents().at(item.source_docs.at(0)).abstract;
      const bool ok = same_key == 1 && item.golds == std::vector<std::string>{st.object} &&
                      item.source_docs.size() == 1 && occurrences(abstract, st.subject) == 1 &&
                      occurrences(abstract, st.object) == 1;
      violations += !ok;
    }
    for (const auto& item : filter_multi_source(index)) {
      ++multi_seen;
      const std::set<std::string> golds(item.golds.begin(), item.golds.end());
      const std::set<std::string> docs_of(item.source_docs.begin(), item.source_docs.end());
      bool backed = true;
      for (const auto& g : item.golds) {
        bool found = false;
        for (const auto& t : triples) {
          found |= t.object == g && docs_of.count(t.doc_id) &&
                   t.subject == item.source_triples.at(0).subject &&
                   t.relation == item.source_triples.at(0).relation;
        }
        backed &= found;
      }
      violations += !(golds.size() >= 2 && golds.size() == item.golds.size() &&
                       docs_of.size() >= 2 && backed);
    }
  }
  const std::string detail = "1000 sets, " + std::to_string(deep_seen) + " deep and " +
                             std::to_string(multi_seen) + " multi items, " +
                             std::to_string(violations) + " violations";
  return violations == 0 && deep_seen > 0 && multi_seen > 0 ? pass(detail) : fail(detail);
}

Verdict metric_oracles() {
  std::size_t mismatches = 0, golden_rows = 0;

  std::ifstream in(fs::path(QUARRY_TEST_DATA_DIR) / "em_f1.tsv");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(cell);
    if (f.size() == 3) f.insert(f.begin() + 1, "");
    std::vector<std::string> golds;
    for (std::size_t pos = 0;;) {
      const std::size_t bar = f[0].find("||", pos);
      golds.push_back(f[0].substr(pos, bar == std::string::npos ? bar : bar - pos));
      if (bar == std::string::npos) break;
      pos = bar + 2;
    }
    ++golden_rows;
    mismatches += std::abs(exact_match(golds, f[1]) - std::stod(f[2])) > 1e-6;
    mismatches += std::abs(f1_score(golds, f[1]) - std::stod(f[3])) > 1e-6;
  }
  if (golden_rows != 20) return fail("golden file has " + std::to_string(golden_rows) + " rows");

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t docs = 2 + rng() % 30;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < docs; ++i) ids.push_back("p" + std::to_string(i));
    std::vector<BenchmarkItem> bench;
    std::vector<std::vector<std::string>> rankings;
    const std::size_t k_max = 1 + rng() % docs;
    const std::vector<std::size_t> ks = {1, 3, 5, 10};
    oracle::RankOracle deep, multi;
    for (std::size_t i = 0; i < 1 + rng() % 20; ++i) {
      const bool is_multi = rng() % 2;
      std::vector<std::string> pool = ids;
      std::shuffle(pool.begin(), pool.end(), rng);
      BenchmarkItem it;
      it.id = "i" + std::to_string(i);
      it.kind = is_multi ? ItemKind::kMulti : ItemKind::kDeep;
      it.source_docs.assign(pool.begin(), pool.begin() + (is_multi ? 2 + rng() % (docs - 1) : 1));
      std::shuffle(pool.begin(), pool.end(), rng);
      oracle::add_item(is_multi ? multi : deep, it.source_docs, pool, k_max, ks);
      bench.push_back(std::move(it));
      rankings.push_back(pool);
    }
    oracle::finish(deep);
    oracle::finish(multi);
    const auto ev = score_rankings(bench, rankings, k_max, ks);
    mismatches += ev.mrr != deep.mrr;
    mismatches += ev.a_mrr != multi.mrr;
    for (std::size_t k : ks) {
      mismatches += ev.hits_at.at(k) != (deep.count ? deep.hits.at(k) : 0.0);
      mismatches += ev.a_hits_at.at(k) != (multi.count ? multi.hits.at(k) : 0.0);
    }
  }

  std::mt19937_64 zrng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t vocab = 2 + zrng() % 29;
    const std::size_t n = 2 + zrng() % 49;
    std::vector<LabeledSample> samples;
    std::vector<std::pair<std::string, int>> plain;
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      for (std::size_t w = 0; w < 1 + zrng() % 8; ++w) {
        std::string word = "w";
        for (std::size_t x = zrng() % vocab + 1; x > 0; x /= 26) {
          word += static_cast<char>('a' + x % 26);
        }
        if (zrng() % 3 == 0) word[0] = 'W';
        text += word + (zrng() % 2 ? ", " : " ");
      }
      const int label = i == 0 ? 0 : i == 1 ? 1 : static_cast<int>(zrng() % 2);
      samples.push_back({text, label});
      plain.emplace_back(text, label);
    }
    const std::size_t min_count = 1 + zrng() % 4;
    auto got = z_scores(samples, min_count);
    const auto want = oracle::z_scores(plain, min_count);
    std::sort(got.begin(), got.end(), [](const ZRow& a, const ZRow& b) { return a.word < b.word; });
    if (got.size() != want.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      mismatches += got[i].word != want[i].word || got[i].n != want[i].n ||
                    std::abs(got[i].p_hat - want[i].p_hat) > 1e-9 ||
                    std::abs(got[i].z - want[i].z) > 1e-9;
    }
  }
  const std::string detail = "20 golden rows, 100 ranking and 100 z-score instances, " +
                             std::to_string(mismatches) + " mismatches";
  return mismatches == 0 ? pass(detail) : fail(detail);
}

Verdict retrieval_exactness() {
  FunctionEmbedder e("literal", [](const std::string& text) {
    Vector v;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stof(cell));
    return v;
  });
  auto literal = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += (i ? "," : "") + std::to_string(static_cast<long>(v[i]));
    }
    return s;
  };
  std::mt19937_64 rng(20260101);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng() % 16;
    const std::size_t n = 1 + rng() % 64;
    std::vector<std::pair<std::string, std::string>> items;
    std::vector<std::vector<double>> raw;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      if (!raw.empty() && rng() % 4 == 0) {
        v = raw[rng() % raw.size()];
        if (rng() % 2) {
          for (auto& x : v) x *= 2;
        }
      } else {
        do {
          for (auto& x : v) x = static_cast<double>(static_cast<int>(rng() % 7) - 3);
        } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; }));
      }
      raw.push_back(v);
      items.emplace_back("id" + std::to_string(rng() % 1000) + "_" + std::to_string(i),
                         literal(v));
    }
    const auto index = VectorIndex::build(items, Granularity::kDocument, e);
    std::vector<double> q = raw[rng() % raw.size()];
    q[rng() % dim] += 1;
    if (std::all_of(q.begin(), q.end(), [](double x) { return x == 0; })) q[0] = 1;
    const std::size_t k = 1 + rng() % (n + 2);
    const auto got = top_k(index, literal(q), k, e).ranked;
    std::vector<std::pair<std::string, std::vector<float>>> unit;
    for (const auto& entry : index.entries()) unit.emplace_back(entry.id, entry.vector);
    const auto want = oracle::exhaustive_scan(unit, embed({literal(q)}, e).front(), k);
    if (got.size() != want.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      mismatches += got[i].id != want[i].first || got[i].score != want[i].second;
    }
  }
  const std::string detail = "100 instances, " + std::to_string(mismatches) + " mismatches";
  return mismatches == 0 ? pass(detail) : fail(detail);
}

struct ReplayTarget {
  std::string name;
  std::size_t documents, triples, deep, multi, matching;
};

Verdict benchmark_replay() {
  const char* root = std::getenv("QUARRY_RELEASED_DATA");
  if (root == nullptr || *root == '\0') {
    return {Verdict::kSkip, "QUARRY_RELEASED_DATA not set; released benchmark files absent"};
  }
  const std::vector<ReplayTarget> targets = {{"aan", 5000, 21526, 318, 173, 500},
                                             {"oc", 5000, 23662, 403, 90, 500}};
  std::string detail;
  bool ok = true;
  for (const auto& t : targets) {
    const fs::path dir = fs::path(root) / t.name;
    for (const char* f : {"corpus.jsonl", "triples.jsonl", "benchmark.jsonl"}) {
      if (!fs::exists(dir / f)) {
        return {Verdict::kSkip, (dir / f).string() + " not present"};
      }
    }
    const std::size_t docs = ingest_corpus(dir / "corpus.jsonl").size();
    const std::size_t triples = load_triples(dir / "triples.jsonl").size();
    const DatasetStats s = dataset_stats(load_benchmark(dir / "benchmark.jsonl"));
    const bool match = docs == t.documents && triples == t.triples && s.deep == t.deep &&
                       s.multi == t.multi && s.matching == t.matching;
    ok &= match;
    detail += (detail.empty() ? "" : "; ") + t.name + " " + std::to_string(docs) + "/" +
              std::to_string(triples) + "/" + std::to_string(s.deep) + "/" +
              std::to_string(s.multi) + "/" + std::to_string(s.matching);
  }
  return ok ? pass(detail) : fail(detail);
}

Verdict prompt_fidelity() {
  const fs::path dir = fs::path(QUARRY_TEST_DATA_DIR) / "prompts";
  const Json fixtures = Json::parse(read_file(dir / "fixtures.json"));
  const std::vector<std::pair<PromptKind, std::string>> roles = {
      {PromptKind::kIdentifier, "identifier"},
      {PromptKind::kQa, "qa"},
      {PromptKind::kAugmentedQa, "augmented_qa"},
      {PromptKind::kMatching, "matching"},
      {PromptKind::kAugmentedMatching, "augmented_matching"},
      {PromptKind::kInsightEval, "insight_eval"}};
  const auto lib = PromptLibrary::defaults();
  std::vector<std::string> differing;
  for (const auto& [kind, name] : roles) {
    const auto args = fixtures.at(name).get<std::vector<std::string>>();
    const std::vector<std::string_view> views(args.begin(), args.end());
    if (lib.get(kind).render(views) != read_file(dir / (name + ".txt"))) differing.push_back(name);
  }
  if (differing.empty()) return pass("6 of 6 prompts byte-identical");
  std::string d = "differing:";
  for (const auto& n : differing) d += " " + n;
  return fail(d);
}

// A miner that always fills its budget, so the bound is exercised.
Verdict context_economy() {
  TempDir dir;
  if (!synth(dir.path())) return fail("synth failed");
  Json config = Json::parse(read_file(dir / "config.json"));
  std::string verbose;
  for (int i = 0; i < 400; ++i) verbose += "word" + std::to_string(i) + " ";
  config["models"]["miner"] = {{"backend", "mock"}, {"mock", {{"kind", "canned"}, {"reply", verbose}}}};
  config["pipelines"] = {"insight"};
  config["m_values"] = {1};
  write_file_atomic(dir / "config.json", config.dump(2));
  if (!chain(dir / "config.json", false)) return fail("chain failed");

  const double mean_doc = ingest_corpus(dir / "work" / "corpus.jsonl").mean_token_count();
  const std::size_t cap = 100;
  if (!(static_cast<double>(cap) < mean_doc)) {
    return fail("precondition: mean document tokens " + fmt(mean_doc, 1) + " <= " +
                std::to_string(cap));
  }
  std::size_t records = 0, violations = 0;
  long worst = 0;
  for (const auto& r : load_run_records(dir / "work" / "runs.jsonl")) {
    if (r.pipeline != Pipeline::kInsight || r.k_or_m != 1 || !r.error.empty()) continue;
    ++records;
    worst = std::max(worst, r.context_tokens);
    violations += !(static_cast<double>(r.context_tokens) < mean_doc);
  }
  const std::string detail = std::to_string(records) + " records, max context " +
                             std::to_string(worst) + " tokens < mean document " +
                             fmt(mean_doc, 1) + " tokens, " + std::to_string(violations) +
                             " violations";
  return records > 0 && worst > 0 && violations == 0 ? pass(detail) : fail(detail);
}

Verdict determinism() {
  std::vector<std::map<std::string, std::string>> artifacts(2);
  for (int i = 0; i < 2; ++i) {
    TempDir dir;
    if (!synth(dir.path()) || !chain(dir / "config.json", true)) return fail("chain failed");
    const fs::path work = dir / "work";
    for (const auto& entry : fs::recursive_directory_iterator(work)) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = fs::relative(entry.path(), work).string();
      artifacts[i][rel] = read_file(entry.path());
    }
  }
  std::size_t differing = 0;
  for (const auto& [rel, bytes] : artifacts[0]) {
    auto it = artifacts[1].find(rel);
    differing += it == artifacts[1].end() || it->second != bytes;
  }
  differing += artifacts[0].size() != artifacts[1].size();
  const std::string detail = std::to_string(artifacts[0].size()) + " artifacts compared, " +
                             std::to_string(differing) + " differ";
  return differing == 0 && artifacts[0].count("runs.jsonl") && artifacts[0].count("metrics.json")
             ? pass(detail)
             : fail(detail);
}

}  // namespace
}  // namespace quarry::acceptance

int main() {
  using namespace quarry::acceptance;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"oracle-end-to-end", oracle_end_to_end},
      {"filter-soundness", filter_soundness},
      {"metric-oracles", metric_oracles},
      {"retrieval-exactness", retrieval_exactness},
      {"benchmark-replay", benchmark_replay},
      {"prompt-fidelity", prompt_fidelity},
      {"context-economy", context_economy},
      {"determinism", determinism}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const char* tag = v.kind == Verdict::kPass ? "PASS" : v.kind == Verdict::kFail ? "FAIL" : "SKIP";
    std::cout << tag << " " << name << ": " << v.detail << std::endl;
    failures += v.kind == Verdict::kFail;
  }
  return failures == 0 ? 0 : 1;
}
