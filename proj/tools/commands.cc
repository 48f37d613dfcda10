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

#include "commands.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "quarry/benchbuild.h"
#include "quarry/config.h"
#include "quarry/corpus.h"
#include "quarry/embedding.h"
#include "quarry/evalkit.h"
#include "quarry/gateway.h"
#include "quarry/io.h"
#include "quarry/mock_backends.h"
#include "quarry/pipelines.h"
#include "quarry/prompts.h"
#include "quarry/retrieval.h"
#include "quarry/synthetic.h"
#include "quarry/text.h"
#include "quarry/triples.h"

namespace quarry::cli {
namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::string config;
  std::string workdir;
  std::string corpus;
  std::string matching;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool force = false;
  bool verbose = false;
};

struct Context {
  RunConfig config;
  Workspace ws;
  bool force = false;
  std::string config_digest;
  PromptLibrary prompts;
  std::ostream* out = nullptr;

  std::ostream& print() const { return *out; }
};

void require(const fs::path& path, const std::string& what, const std::string& producer) {
  if (!fs::exists(path)) throw Error(what + " missing: " + producer);
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Flags seed the configuration; values present in the config file win.
Context make_context(const GlobalFlags& flags, bool need_config_inputs) {
  Json j = Json::object();
  fs::path base;
  if (!flags.config.empty()) {
    try {
      j = Json::parse(read_file(flags.config));
    } catch (const Json::parse_error& e) {
      throw ParseError(flags.config + ": " + e.what());
    }
    base = fs::path(flags.config).parent_path();
  }
  auto seed_flag = [&](const char* key, const std::string& value) {
    if (!value.empty() && !j.contains(key)) j[key] = fs::absolute(value).string();
  };
  seed_flag("corpus", flags.corpus);
  seed_flag("matching", flags.matching);
  seed_flag("workdir", flags.workdir);
  if (flags.seed && !j.contains("seed")) j["seed"] = *flags.seed;
  if (flags.workers && !j.contains("workers")) j["workers"] = *flags.workers;

  Context c;
  c.config = RunConfig::from_json(j, base);
  if (need_config_inputs) c.config.validate();
  c.ws.dir = c.config.workdir;
  c.force = flags.force;
  c.config_digest = c.config.digest();
  c.prompts = c.config.prompts_dir.empty() ? PromptLibrary::defaults()
                                           : PromptLibrary::from_directory(c.config.prompts_dir);
  fs::create_directories(c.ws.dir);
  return c;
}

std::string version() { return "0.3.0"; }

Json read_manifest(const Workspace& ws) {
  Json entries = Json::array();
  if (!fs::exists(ws.manifest())) return entries;
  for_each_jsonl(ws.manifest(), [&](const Json& rec, std::size_t) { entries.push_back(rec); });
  return entries;
}

Json output_digests(const Workspace& ws, const std::vector<fs::path>& outputs) {
  Json j = Json::object();
  for (const auto& p : outputs) {
    j[fs::relative(p, ws.dir).generic_string()] =
        fs::exists(p) ? sha256_hex(read_file(p)) : std::string();
  }
  return j;
}

// True when the last manifest entry for `step` has the same digests and
// its outputs are unchanged on disk.
bool up_to_date(const Context& c, const std::string& step, const std::string& inputs,
                const std::vector<fs::path>& outputs) {
  if (c.force) return false;
  const Json entries = read_manifest(c.ws);
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->value("command", "") != step) continue;
    return it->value("inputs_digest", "") == inputs &&
           it->value("config_digest", "") == c.config_digest &&
           it->value("version", "") == version() &&
           it->value("outputs", Json::object()) == output_digests(c.ws, outputs);
  }
  return false;
}

void record_step(const Context& c, const std::string& step, const std::string& inputs,
                 const std::vector<fs::path>& outputs) {
  std::string text = fs::exists(c.ws.manifest()) ? read_file(c.ws.manifest()) : "";
  Json line = {{"command", step},
               {"inputs_digest", inputs},
               {"config_digest", c.config_digest},
               {"version", version()},
               {"outputs", output_digests(c.ws, outputs)}};
  text += line.dump() + "\n";
  write_file_atomic(c.ws.manifest(), text);
}

void add_optional_file(Digest& d, const fs::path& p) {
  if (p.empty() || !fs::exists(p)) {
    d.add("-");
  } else {
    d.add_file(p);
  }
}

template <typename T>
std::string jsonl_of(const std::vector<T>& items) {
  std::string out;
  for (const auto& x : items) out += to_json(x).dump() + "\n";
  return out;
}

fs::path benchmark_path(const Context& c) {
  return c.config.benchmark.empty() ? c.ws.benchmark() : c.config.benchmark;
}

std::vector<BenchmarkItem> load_bench(const Context& c) {
  const fs::path p = benchmark_path(c);
  require(p, "benchmark", "build-bench");
  return load_benchmark(p);
}

// ---- ingest -------------------------------------------------------------

int cmd_ingest(Context& c) {
  Digest d;
  d.add("ingest").add_file(c.config.corpus);
  add_optional_file(d, c.config.matching);
  d.add(std::to_string(c.config.bfs_size)).add(join(c.config.bfs_seeds, ","));
  const std::string inputs = d.hex();
  const std::vector<fs::path> outputs = {c.ws.corpus(), c.ws.matching()};
  if (up_to_date(c, "ingest", inputs, outputs)) {
    c.print() << "ingest: up to date\n";
    return 0;
  }
  Corpus corpus = ingest_corpus(c.config.corpus);
  std::vector<MatchingItem> pairs;
  std::size_t dropped_pairs = 0;
  if (!c.config.matching.empty()) {
    MatchingLoad load = load_matching_pairs(c.config.matching, corpus);
    pairs = std::move(load.pairs);
    dropped_pairs = load.dropped;
  }
  if (c.config.bfs_size > 0 && c.config.bfs_size < corpus.size()) {
    std::vector<std::string> seeds = c.config.bfs_seeds;
    if (seeds.empty()) seeds.push_back(corpus.documents().begin()->first);
    const auto ids = bfs_sample(corpus.with_matching_edges(pairs), seeds, c.config.bfs_size);
    corpus = corpus.subset(ids);
    std::vector<MatchingItem> kept;
    for (const auto& p : pairs) {
      if (corpus.contains(p.doc_a) && corpus.contains(p.doc_b)) kept.push_back(p);
    }
    pairs = std::move(kept);
  }
  write_file_atomic(c.ws.corpus(), serialize_corpus(corpus));
  write_file_atomic(c.ws.matching(), jsonl_of(pairs));
  record_step(c, "ingest", inputs, outputs);
  c.print() << "ingest: " << corpus.size() << " documents, " << corpus.edge_count()
            << " edges, mean " << fmt4(corpus.mean_token_count()) << " tokens, "
            << pairs.size() << " matching pairs (" << corpus.dropped_edges()
            << " edges and " << dropped_pairs << " pairs dropped)\n";
  return 0;
}

// ---- extract ------------------------------------------------------------

int cmd_extract(Context& c) {
  require(c.ws.corpus(), "corpus", "ingest");
  Digest d;
  d.add("extract").add_file(c.ws.corpus());
  add_optional_file(d, c.config.triples);
  add_optional_file(d, c.config.relation_rules);
  add_optional_file(d, c.config.stoplist);
  const std::string inputs = d.hex();
  const std::vector<fs::path> outputs = {c.ws.raw_triples(), c.ws.triples()};
  if (up_to_date(c, "extract", inputs, outputs)) {
    c.print() << "extract: up to date\n";
    return 0;
  }
  const Corpus corpus = ingest_corpus(c.ws.corpus());
  std::vector<Triple> raw;
  std::size_t skipped = 0;
  if (!c.config.triples.empty()) {
    raw = load_triples(c.config.triples);
  } else {
    const ModelHandle extractor = c.config.handle(Role::kExtractor);
    Gateway gateway;
    std::vector<const Document*> docs;
    for (const auto& [id, doc] : corpus.documents()) docs.push_back(&doc);
    std::vector<ExtractionResult> results(docs.size());
    parallel_for(docs.size(), static_cast<std::size_t>(extractor.parallelism_cap),
                 [&](std::size_t i) {
                   results[i] = extract_triples(*docs[i], gateway, extractor, c.prompts);
                 });
    for (auto& r : results) {
      skipped += r.skipped_lines;
      raw.insert(raw.end(), r.triples.begin(), r.triples.end());
    }
  }
  RelationRules rules;
  if (!c.config.relation_rules.empty()) rules = load_relation_rules(c.config.relation_rules);
  const auto stop =
      c.config.stoplist.empty() ? default_stoplist() : load_stoplist(c.config.stoplist);
  const auto normalized = normalize_relations(raw, rules);
  const auto kept = filter_noisy(normalized, stop);
  write_file_atomic(c.ws.raw_triples(), serialize_triples(raw));
  write_file_atomic(c.ws.triples(), serialize_triples(kept));
  record_step(c, "extract", inputs, outputs);
  c.print() << "extract: " << raw.size() << " raw triples (" << skipped
            << " unparseable lines), " << normalized.size() << " after normalization, "
            << kept.size() << " after noise filtering\n";
  return 0;
}

// ---- build-bench --------------------------------------------------------

int cmd_build_bench(Context& c, const std::string& review) {
  require(c.ws.triples(), "triples", "extract");
  require(c.ws.corpus(), "corpus", "ingest");
  Digest d;
  d.add("build-bench").add_file(c.ws.triples()).add_file(c.ws.corpus());
  add_optional_file(d, c.ws.matching());
  add_optional_file(d, review);
  const std::string inputs = d.hex();
  std::vector<fs::path> outputs = {c.ws.benchmark(), c.ws.bench_stats()};
  if (review.empty()) outputs.push_back(c.ws.review());
  if (up_to_date(c, "build-bench", inputs, outputs)) {
    c.print() << "build-bench: up to date\n";
    return 0;
  }
  const Corpus corpus = ingest_corpus(c.ws.corpus());
  const auto triples = load_triples(c.ws.triples());
  const TripleIndex index = index_triples(triples);
  std::vector<BenchmarkItem> qa = filter_deep_insight(index, corpus);
  const std::size_t deep_candidates = qa.size();
  const auto multi = filter_multi_source(index);
  qa.insert(qa.end(), multi.begin(), multi.end());
  QuestionGenStats qstats;
  std::vector<BenchmarkItem> items;
  if (!qa.empty()) {
    Gateway gateway;
    items = generate_questions(qa, gateway, c.config.handle(Role::kQuestionGen), c.prompts,
                               &qstats);
  }
  if (fs::exists(c.ws.matching())) {
    const auto pairs = load_matching_pairs(c.ws.matching(), corpus).pairs;
    const auto matching = build_matching_bench(pairs);
    items.insert(items.end(), matching.begin(), matching.end());
  }
  if (!review.empty()) items = apply_review(items, review);
  emit_benchmark(items, c.ws.benchmark());
  if (review.empty()) write_file_atomic(c.ws.review(), review_tsv(items));
  const DatasetStats stats = dataset_stats(items);
  const Json sj = {{"documents", corpus.size()},
                   {"triples", triples.size()},
                   {"deep", stats.deep},
                   {"multi", stats.multi},
                   {"matching", stats.matching},
                   {"deep_candidates", deep_candidates},
                   {"multi_candidates", multi.size()},
                   {"questions_generated", qstats.generated},
                   {"questions_regenerated", qstats.regenerated},
                   {"dropped_leak", qstats.dropped_leak},
                   {"dropped_error", qstats.dropped_error}};
  write_file_atomic(c.ws.bench_stats(), sj.dump(2) + "\n");
  record_step(c, "build-bench", inputs, outputs);
  c.print() << "build-bench: deep=" << stats.deep << " multi=" << stats.multi
            << " matching=" << stats.matching << " (dropped " << qstats.dropped_leak
            << " leaking, " << qstats.dropped_error << " failed)\n";
  return 0;
}

// ---- index --------------------------------------------------------------

std::vector<Granularity> granularities(const std::string& which) {
  if (which == "all") return {Granularity::kDocument, Granularity::kTriple};
  return {parse_granularity(which)};
}

fs::path index_path(const Context& c, Granularity g) {
  return g == Granularity::kDocument ? c.ws.doc_index() : c.ws.triple_index();
}

int cmd_index_build(Context& c, const std::string& which) {
  auto embedder = c.config.make_embedder();
  for (Granularity g : granularities(which)) {
    std::vector<std::pair<std::string, std::string>> items;
    if (g == Granularity::kDocument) {
      require(c.ws.corpus(), "corpus", "ingest");
      items = document_items(ingest_corpus(c.ws.corpus()));
    } else {
      require(c.ws.triples(), "triples", "extract");
      items = triple_items(load_triples(c.ws.triples()));
    }
    const fs::path path = index_path(c, g);
    fs::create_directories(path.parent_path());
    const BuildOutcome outcome = build_or_load_index(path, items, g, *embedder, c.force);
    if (outcome.rebuilt) {
      record_step(c, "index build " + std::string(granularity_name(g)),
                  outcome.index.digest(), {path, fs::path(path.string() + ".manifest")});
    }
    c.print() << "index build: " << granularity_name(g) << " index, "
              << outcome.index.size() << " entries, dim " << outcome.index.dim() << ", "
              << (outcome.rebuilt ? "built" : "up to date") << "\n";
  }
  return 0;
}

VectorIndex load_index(const Context& c, Granularity g, const Embedder& embedder) {
  const fs::path p = index_path(c, g);
  require(p, std::string(granularity_name(g)) + " index", "index build");
  VectorIndex index = VectorIndex::load(p);
  if (index.embedder_id() != embedder.id()) {
    throw Error(p.string() + " was built with " + index.embedder_id() +
                " but the configured embedder is " + embedder.id());
  }
  return index;
}

int cmd_index_query(Context& c, const std::string& which, const std::string& text,
                    std::size_t k) {
  auto embedder = c.config.make_embedder();
  const Granularity g = parse_granularity(which);
  const VectorIndex index = load_index(c, g, *embedder);
  const RetrievalResult r = top_k(index, text, k, *embedder);
  std::size_t rank = 1;
  for (const auto& hit : r.ranked) {
    std::string payload = index.find(hit.id)->payload;
    if (payload.size() > 80) payload = payload.substr(0, 77) + "...";
    c.print() << rank++ << "\t" << hit.id << "\t" << fmt4(hit.score) << "\t" << payload
              << "\n";
  }
  return 0;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (trim(part).empty()) continue;
    const long v = std::stol(std::string(trim(part)));
    if (v < 1) throw Error("cut-offs must be >= 1");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw Error("no cut-offs given");
  return ks;
}

int cmd_index_eval(Context& c, std::size_t k_max, const std::string& ks) {
  auto embedder = c.config.make_embedder();
  const auto bench = load_bench(c);
  const VectorIndex index = load_index(c, Granularity::kDocument, *embedder);
  const RetrieverEval ev = eval_retriever(bench, index, *embedder, k_max, parse_ks(ks));
  write_file_atomic(c.ws.retriever_eval(), to_json(ev).dump(2) + "\n");
  c.print() << "index eval: deep=" << ev.deep_count << " multi=" << ev.multi_count << "\n";
  for (const auto& [k, h] : ev.hits_at) c.print() << "  Hits@" << k << "\t" << fmt4(h) << "\n";
  c.print() << "  MRR\t" << fmt4(ev.mrr) << "\n";
  for (const auto& [k, h] : ev.a_hits_at) {
    c.print() << "  A-Hits@" << k << "\t" << fmt4(h) << "\n";
  }
  c.print() << "  A-MRR\t" << fmt4(ev.a_mrr) << "\n";
  return 0;
}

// ---- run ----------------------------------------------------------------

int cmd_run(Context& c) {
  const auto bench = load_bench(c);
  const auto& pipes = c.config.pipelines;
  const bool need_doc = std::count(pipes.begin(), pipes.end(), Pipeline::kRagDoc) > 0;
  const bool need_triple = std::count(pipes.begin(), pipes.end(), Pipeline::kRagTriple) > 0;
  const bool need_insight = std::count(pipes.begin(), pipes.end(), Pipeline::kInsight) > 0;
  const bool has_matching = std::any_of(bench.begin(), bench.end(), [](const auto& i) {
    return i.kind == ItemKind::kMatching;
  });

  Digest d;
  d.add("run").add_file(benchmark_path(c));
  if (need_doc) {
    require(c.ws.doc_index(), "document index", "index build");
    d.add_file(c.ws.doc_index());
  }
  if (need_triple) {
    require(c.ws.triple_index(), "triple index", "index build");
    d.add_file(c.ws.triple_index());
  }
  if (has_matching) {
    require(c.ws.corpus(), "corpus", "ingest");
    d.add_file(c.ws.corpus());
  }
  const std::string inputs = d.hex();
  if (up_to_date(c, "run", inputs, {c.ws.runs()})) {
    c.print() << "run: up to date\n";
    return 0;
  }

  auto embedder = c.config.make_embedder();
  std::optional<VectorIndex> doc_index, triple_index;
  if (need_doc) doc_index = load_index(c, Granularity::kDocument, *embedder);
  if (need_triple) triple_index = load_index(c, Granularity::kTriple, *embedder);
  std::optional<Corpus> corpus;
  if (has_matching) corpus = ingest_corpus(c.ws.corpus());

  Gateway gateway;
  PipelineStack stack;
  stack.gateway = &gateway;
  stack.prompts = &c.prompts;
  stack.generator = c.config.handle(Role::kGenerator);
  if (need_insight) {
    stack.identifier = c.config.handle(Role::kIdentifier);
    stack.miner = c.config.handle(Role::kMiner);
  }
  stack.corpus = corpus ? &*corpus : nullptr;
  stack.doc_index = doc_index ? &*doc_index : nullptr;
  stack.triple_index = triple_index ? &*triple_index : nullptr;
  stack.embedder = embedder.get();
  stack.multi_answer_samples = c.config.multi_answer_samples;

  std::vector<BenchmarkItem> qa, matching;
  for (const auto& item : bench) {
    (item.kind == ItemKind::kMatching ? matching : qa).push_back(item);
  }
  std::vector<RunRecord> records;
  auto run = [&](const std::vector<BenchmarkItem>& items, Pipeline p, int k_or_m) {
    auto batch = run_batch(items, p, k_or_m, stack, c.config.workers);
    records.insert(records.end(), std::make_move_iterator(batch.begin()),
                   std::make_move_iterator(batch.end()));
  };
  for (Pipeline p : pipes) {
    switch (p) {
      case Pipeline::kVanilla:
        run(bench, p, 0);
        break;
      case Pipeline::kRagDoc:
        for (int k : c.config.k_values) {
          run(qa, p, k);
          // Matching retrieves a single document whatever the sweep.
          if (k == c.config.k_values.front()) run(matching, p, 1);
        }
        break;
      case Pipeline::kRagTriple:
        for (int k : c.config.k_values) run(qa, p, k);
        break;
      case Pipeline::kInsight:
        for (int m : c.config.m_values) run(bench, p, m);
        break;
    }
  }
  write_file_atomic(c.ws.runs(), serialize_run_records(records));
  record_step(c, "run", inputs, {c.ws.runs()});
  const auto failed = std::count_if(records.begin(), records.end(),
                                    [](const RunRecord& r) { return !r.error.empty(); });
  c.print() << "run: " << records.size() << " records, " << failed << " failed\n";
  return 0;
}

// ---- eval / report / analyze-z -------------------------------------------

std::vector<RunRecord> load_runs(const Context& c) {
  require(c.ws.runs(), "run records", "run");
  return load_run_records(c.ws.runs());
}

int cmd_eval(Context& c) {
  const auto records = load_runs(c);
  const auto bench = load_bench(c);
  Digest d;
  d.add("eval").add_file(c.ws.runs()).add_file(benchmark_path(c));
  const std::string inputs = d.hex();
  if (up_to_date(c, "eval", inputs, {c.ws.metrics()})) {
    c.print() << "eval: up to date\n";
    return 0;
  }
  const auto reports = aggregate_all(records, bench, c.config.normalize);

  // Miner recall over mined completions of multi-answer items.
  std::map<std::string, const BenchmarkItem*> by_id;
  for (const auto& item : bench) by_id[item.id] = &item;
  Json recall = Json::object();
  std::map<int, std::pair<double, std::size_t>> sums;
  for (const auto& r : records) {
    if (r.pipeline != Pipeline::kInsight || r.insights.empty()) continue;
    const BenchmarkItem* item = by_id.at(r.item_id);
    if (item->kind != ItemKind::kMulti) continue;
    auto& s = sums[r.k_or_m];
    s.first += miner_recall_at_k(item->golds, r.insights.front().completions, 10);
    ++s.second;
  }
  for (const auto& [m, s] : sums) recall[std::to_string(m)] = s.first / static_cast<double>(s.second);

  Json rj = Json::array();
  for (const auto& r : reports) rj.push_back(to_json(r));
  const Json metrics = {{"reports", rj}, {"miner_recall_at_10", recall}};
  write_file_atomic(c.ws.metrics(), metrics.dump(2) + "\n");
  record_step(c, "eval", inputs, {c.ws.metrics()});
  c.print() << report_table(reports);
  return 0;
}

int cmd_report(Context& c) {
  require(c.ws.metrics(), "metrics", "eval");
  Digest d;
  d.add("report").add_file(c.ws.metrics());
  const std::string inputs = d.hex();
  const Json metrics = Json::parse(read_file(c.ws.metrics()));
  std::vector<MetricReport> reports;
  for (const auto& r : metrics.at("reports")) reports.push_back(metric_report_from_json(r));
  const auto written = sweep_report(reports, c.ws.report_dir());
  record_step(c, "report", inputs, written);
  for (const auto& p : written) c.print() << "report: wrote " << p.string() << "\n";
  return 0;
}

int cmd_analyze_z(Context& c, std::optional<int> m, std::size_t min_count, std::size_t top) {
  const auto records = load_runs(c);
  const auto bench = load_bench(c);
  const int use_m = m ? *m : c.config.m_values.front();
  std::vector<RunRecord> baseline, augmented;
  for (const auto& r : records) {
    if (r.pipeline == Pipeline::kVanilla) baseline.push_back(r);
    if (r.pipeline == Pipeline::kInsight && r.k_or_m == use_m) augmented.push_back(r);
  }
  if (baseline.empty() || augmented.empty()) {
    throw Error("analyze-z needs vanilla and insight run records: run");
  }
  const auto samples = flip_labels(bench, baseline, augmented);
  const auto rows = z_scores(samples, min_count);
  std::string tsv = "word\tn\tp_hat\tz\n";
  for (const auto& r : rows) {
    tsv += r.word + "\t" + std::to_string(r.n) + "\t" + fmt4(r.p_hat) + "\t" + fmt4(r.z) + "\n";
  }
  write_file_atomic(c.ws.zscores(), tsv);
  c.print() << "analyze-z: " << samples.size() << " flipped samples, " << rows.size()
            << " words\n";
  const std::size_t n = std::min(top, rows.size());
  c.print() << "most positive:\n";
  for (std::size_t i = 0; i < n; ++i) {
    c.print() << "  " << rows[i].word << "\t" << fmt4(rows[i].z) << "\n";
  }
  c.print() << "most negative:\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[rows.size() - 1 - i];
    c.print() << "  " << r.word << "\t" << fmt4(r.z) << "\n";
  }
  return 0;
}

// ---- synth --------------------------------------------------------------

struct SynthFlags {
  std::string out;
  std::size_t documents = 200;
  std::uint64_t seed = 7;
  std::size_t pairs = 100;
  bool corrupt_miner = false;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  SyntheticOptions opts;
  opts.documents = f.documents;
  opts.seed = f.seed;
  opts.matching_pairs = f.pairs;
  const SyntheticWorld world = make_synthetic_world(opts);
  const fs::path dir = f.out;
  fs::create_directories(dir / "tables");
  write_file_atomic(dir / "corpus.jsonl", serialize_corpus(world.corpus));
  write_file_atomic(dir / "matching.jsonl", jsonl_of(world.pairs));
  write_file_atomic(dir / "tables" / "extractor.json", world.extractor_kb.to_json().dump(1) + "\n");

  // Oracle tables follow the questions the template generator will ask.
  const auto triples = filter_noisy(normalize_relations(world.triples, {}), default_stoplist());
  const TripleIndex index = index_triples(triples);
  auto items = filter_deep_insight(index, world.corpus);
  const auto multi = filter_multi_source(index);
  items.insert(items.end(), multi.begin(), multi.end());
  Gateway gateway;
  ModelHandle qgen = ModelHandle::defaults_for(Role::kQuestionGen);
  qgen.backend = make_template_qgen_backend();
  items = generate_questions(items, gateway, qgen, PromptLibrary::defaults());
  write_file_atomic(dir / "tables" / "identifier.json",
                    oracle_identifier_kb(items).to_json().dump(1) + "\n");
  write_file_atomic(dir / "tables" / "miner.json",
                    oracle_miner_kb(items).to_json().dump(1) + "\n");

  auto mock = [](Json m) { return Json{{"backend", "mock"}, {"mock", std::move(m)}}; };
  Json config = {
      {"corpus", "corpus.jsonl"},
      {"matching", "matching.jsonl"},
      {"workdir", "work"},
      {"seed", f.seed},
      {"models",
       {{"extractor",
         mock({{"kind", "kb"}, {"path", "tables/extractor.json"}, {"key_after", "Abstract:"}})},
        {"qgen", mock({{"kind", "qgen_template"}})},
        {"identifier", mock({{"kind", "kb"},
                             {"path", "tables/identifier.json"},
                             {"key_after", "Task:"},
                             {"default", "[{}]"}})},
        {"miner", f.corrupt_miner
                      ? mock({{"kind", "canned"}, {"reply", "unrelated sentinel"}})
                      : mock({{"kind", "kb"}, {"path", "tables/miner.json"}})},
        {"generator",
         mock({{"kind", "router"},
               {"routes", Json::array({{{"contains", "Paper-A:"},
                                        {"mock", {{"kind", "lexical_matching"}}}}})},
               {"default", {{"kind", "extractive"}}}})}}},
      {"embedder", {{"kind", "hashing"}, {"dim", 256}}},
      {"pipelines", {"vanilla", "rag_doc", "rag_triple", "insight"}},
      {"k_values", {1, 3}},
      {"m_values", {1}},
      {"workers", 4}};
  write_file_atomic(dir / "config.json", config.dump(2) + "\n");
  out << "synth: " << world.corpus.size() << " documents, " << world.triples.size()
      << " raw triples, " << world.pairs.size() << " matching pairs, " << items.size()
      << " oracle questions -> " << (dir / "config.json").string() << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"quarry: insight-driven retrieval-augmented generation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  GlobalFlags g;
  app.add_option("-c,--config", g.config, "Run configuration file (JSON)");
  app.add_option("--workdir", g.workdir, "Working directory for artifacts");
  app.add_option("--corpus", g.corpus, "Corpus file (JSON lines)");
  app.add_option("--matching", g.matching, "Matching labels file (JSON lines)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--workers", g.workers, "Items processed concurrently");
  app.add_flag("--force", g.force, "Rerun even when the manifest says up to date");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.fallthrough();

  auto* ingest = app.add_subcommand("ingest", "Load the corpus and matching labels");
  auto* extract = app.add_subcommand("extract", "Extract, normalize and filter triples");
  auto* build = app.add_subcommand("build-bench", "Build the deep, multi and matching benchmark");
  std::string review;
  build->add_option("--review", review, "Review file with accept/reject decisions")
      ->check(CLI::ExistingFile);

  auto* index = app.add_subcommand("index", "Vector index operations");
  index->require_subcommand(1);
  std::string granularity = "all";
  auto* ibuild = index->add_subcommand("build", "Build document and triple indexes");
  ibuild->add_option("--granularity", granularity, "document, triple or all");
  auto* iquery = index->add_subcommand("query", "Query an index");
  std::string query_text;
  std::string query_granularity = "document";
  std::size_t query_k = 5;
  iquery->add_option("query", query_text, "Query text")->required();
  iquery->add_option("--granularity", query_granularity, "document or triple");
  iquery->add_option("-k", query_k, "Results to return")->check(CLI::PositiveNumber);
  auto* ieval = index->add_subcommand("eval", "Hits@K and MRR of the document retriever");
  std::size_t k_max = 50;
  std::string ks = "1,5,10,50";
  ieval->add_option("--k-max", k_max, "Ranking depth")->check(CLI::PositiveNumber);
  ieval->add_option("--ks", ks, "Comma-separated Hits cut-offs");

  auto* run = app.add_subcommand("run", "Run the configured pipelines over the benchmark");
  auto* eval = app.add_subcommand("eval", "Score run records");
  auto* report = app.add_subcommand("report", "Write sweep tables and plots");
  auto* analyze = app.add_subcommand("analyze-z", "Word z-scores of insight-driven flips");
  std::optional<int> z_m;
  std::size_t min_count = 3;
  std::size_t top = 5;
  analyze->add_option("--m", z_m, "Insight count of the augmented run");
  analyze->add_option("--min-count", min_count, "Minimum samples containing a word");
  analyze->add_option("--top", top, "Words shown per direction");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus and mock configuration");
  SynthFlags sf;
  synth->add_option("--out", sf.out, "Output directory")->required();
  synth->add_option("--documents", sf.documents, "Number of documents");
  synth->add_option("--pairs", sf.pairs, "Number of matching pairs");
  synth->add_option("--seed", sf.seed, "Generator seed");
  synth->add_flag("--corrupt-miner", sf.corrupt_miner,
                  "Configure a miner that never returns the answer");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (synth->parsed()) return cmd_synth(sf, out);
    const bool needs_inputs = ingest->parsed();
    Context c = make_context(g, needs_inputs);
    c.out = &out;
    if (ingest->parsed()) return cmd_ingest(c);
    if (extract->parsed()) return cmd_extract(c);
    if (build->parsed()) return cmd_build_bench(c, review);
    if (ibuild->parsed()) return cmd_index_build(c, granularity);
    if (iquery->parsed()) return cmd_index_query(c, query_granularity, query_text, query_k);
    if (ieval->parsed()) return cmd_index_eval(c, k_max, ks);
    if (run->parsed()) return cmd_run(c);
    if (eval->parsed()) return cmd_eval(c);
    if (report->parsed()) return cmd_report(c);
    if (analyze->parsed()) return cmd_analyze_z(c, z_m, min_count, top);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace quarry::cli
