// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bm25.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "fusion.hpp"
#include "index.hpp"
#include "metrics.hpp"
#include "oracles/oracles.hpp"
#include "pipeline.hpp"
#include "prompts.hpp"
#include "significance.hpp"
#include "text.hpp"
#include "trec_io.hpp"
#include "unit/helpers.hpp"

using namespace qrkit;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::string detail;
  bool ok = true;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

std::string fmt(const char* f, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Bench {
  InvertedIndex index;
  std::vector<Topic> topics;
  Qrels qrels;
  InstructionSet instructions;
  MockGenerator generator;

  Bench() : generator([] {
    GeneratorConfig c;
    c.seed = 42;
    return c;
  }()) {
    const auto dir = testutil::data_dir() / "synthetic";
    index = InvertedIndex::build(read_corpus_jsonl((dir / "corpus.jsonl").string()));
    topics = read_topics((dir / "topics.tsv").string());
    qrels = read_qrels((dir / "qrels.txt").string());
    instructions = load_instruction_set("general");
  }
  PipelineResources resources() { return {&index, &instructions, &generator, &qrels}; }
};

Bench& bench() {
  static Bench b;
  return b;
}

PipelineConfig ensemble_cfg(std::size_t n, double beta) {
  PipelineConfig c;
  c.n_instructions = n;
  c.beta = beta;
  return c;
}

RunFile run_all(const std::function<Ranking(const Topic&)>& f) {
  RunFile run;
  for (const auto& t : bench().topics) run.push_back(f(t));
  return run;
}

// BM25 against a brute-force scorer on random corpora.
Check criterion1() {
  Check c;
  std::mt19937 rng(1);
  TokenizerConfig tc;
  tc.stopwords = false;
  std::size_t compared = 0;
  for (int corpus = 0; corpus < 50; ++corpus) {
    const std::size_t n_docs = 1 + rng() % 200;
    const std::size_t vocab = 5 + rng() % 60;
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n_docs; ++i) {
      std::string text;
      const std::size_t len = 1 + rng() % 40;
      for (std::size_t w = 0; w < len; ++w) text += "w" + std::to_string(rng() % vocab) + " ";
      docs.push_back({"doc" + std::to_string(i), text, 0});
    }
    const auto index = InvertedIndex::build(docs, tc, 1 + corpus % 4);
    std::vector<oracle::Doc> odocs;
    for (const auto& d : docs) odocs.push_back({d.doc_id, index.tokenizer().tokenize(d.text)});
    for (int qn = 0; qn < 5; ++qn) {
      WeightedQuery q{"q", {}};
      std::vector<std::pair<std::string, double>> oq;
      const std::size_t len = 1 + rng() % 8;
      for (std::size_t i = 0; i < len; ++i) {
        const std::string term = "w" + std::to_string(rng() % (vocab + 5));
        const double w = qn % 2 ? 1.0 : 0.25 * static_cast<double>(rng() % 5);
        q.terms.push_back({term, w});
        oq.emplace_back(term, w);
      }
      const auto expected = oracle::rank(oracle::bm25_all(odocs, oq), 1000, 1e-12);
      const auto got = search(index, q, 1000);
      if (got.size() != expected.size()) {
        c.fail("result count differs");
        continue;
      }
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (got.entries[i].doc_id != expected[i].first) {
          c.fail("order differs");
        }
        if (std::fabs(got.entries[i].score - expected[i].second) >= 1e-9) c.fail("score differs");
        ++compared;
      }
    }
  }
  if (c.ok) c.detail = "50 corpora, " + std::to_string(compared) + " scored documents within 1e-9";
  return c;
}

// Metrics against brute-force definitions.
Check criterion2() {
  Check c;
  std::mt19937 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int pool = 3 + static_cast<int>(rng() % 40);
    std::vector<std::string> docs;
    for (int i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));
    std::shuffle(docs.begin(), docs.end(), rng);
    const std::vector<std::string> order(docs.begin(), docs.begin() + static_cast<long>(rng() % (pool + 1)));
    Qrels q;
    oracle::Judged j;
    for (const auto& d : docs) {
      if (rng() % 3 == 0) continue;
      const int g = static_cast<int>(rng() % 4);
      q.add("q", d, g);
      j[d] = g;
    }
    std::vector<std::pair<std::string, double>> scored;
    for (std::size_t i = 0; i < order.size(); ++i) scored.emplace_back(order[i], 1000.0 - static_cast<double>(i));
    const auto r = make_ranking("q", scored, 0, "t");
    auto same = [&](std::optional<double> a, std::optional<double> b) {
      if (a.has_value() != b.has_value()) return false;
      return !a || std::fabs(*a - *b) < 1e-9;
    };
    for (int k : {5, 10}) {
      if (!same(ndcg_at_k(r, q, k), oracle::ndcg(order, j, k))) c.fail("nDCG@" + std::to_string(k));
      if (std::fabs(precision_at_k(r, q, k) - oracle::precision(order, j, k, 1)) >= 1e-9) c.fail("P@k");
    }
    if (!same(average_precision(r, q), oracle::average_precision(order, j, 1))) c.fail("MAP");
    for (int t : {1, 2}) {
      if (std::fabs(reciprocal_rank(r, q, t) - oracle::reciprocal_rank(order, j, t)) >= 1e-9) c.fail("RR");
    }
    if (!same(recall_at_k(r, q, 10), oracle::recall(order, j, 10, 1))) c.fail("recall@10");

    // The ideal ordering scores exactly 1.
    std::vector<std::pair<std::string, int>> ideal(j.begin(), j.end());
    std::stable_sort(ideal.begin(), ideal.end(), [](auto& a, auto& b) { return a.second > b.second; });
    std::vector<std::pair<std::string, double>> ideal_scored;
    for (std::size_t i = 0; i < ideal.size(); ++i) ideal_scored.emplace_back(ideal[i].first, 1000.0 - static_cast<double>(i));
    const auto perfect = make_ranking("q", ideal_scored, 0, "t");
    for (int k : {5, 10}) {
      const auto v = ndcg_at_k(perfect, q, k);
      if (v && *v != 1.0) c.fail("perfect ranking nDCG != 1.0");
    }
  }
  if (c.ok) c.detail = "200 instances, nDCG@5/10 P@5/10 MAP RR(t=1,2) R@10 within 1e-9, ideal nDCG = 1.0";
  return c;
}

// Degenerate configurations reproduce their reference runs byte for byte.
Check criterion3() {
  Check c;
  auto res = bench().resources();
  const auto cfg1 = ensemble_cfg(1, 1.0);
  const auto ens = format_run(run_all([&](const Topic& t) { return run_method(t, res, cfg1).ranking; }));
  const auto single = format_run(run_all([&](const Topic& t) { return gen_qr_single(t, res, cfg1); }));
  if (ens != single) c.fail("ensemble n=1 differs from single reformulation");

  PipelineConfig raw;
  raw.method = Method::raw;
  const auto cfg0 = ensemble_cfg(10, 0.0);
  const auto zero = format_run(run_all([&](const Topic& t) { return run_method(t, res, cfg0).ranking; }));
  const auto base = format_run(run_all([&](const Topic& t) { return run_method(t, res, raw).ranking; }));
  if (zero != base) c.fail("beta=0 differs from raw BM25");

  for (const auto& t : bench().topics) {
    const auto r = run_method(t, res, raw).ranking;
    const std::vector<Ranking> one{r};
    for (FusionMethod m : {FusionMethod::rrf, FusionMethod::score_sum, FusionMethod::score_max}) {
      const auto fused = fuse(one, m);
      if (fused.size() != r.size()) c.fail("single-list fusion changed length");
      for (std::size_t i = 0; i < r.size() && i < fused.size(); ++i) {
        if (fused.entries[i].doc_id != r.entries[i].doc_id) c.fail("single-list fusion changed order");
      }
    }
    auto fcfg = ensemble_cfg(1, 1.0);
    fcfg.method = Method::fusion;
    if (gen_qr_fusion(t, res, fcfg) != gen_qr_single(t, res, fcfg)) c.fail("fusion n=1 differs");
  }
  if (c.ok) c.detail = "ensemble n=1 == single, beta=0 == raw, single-list fusion keeps order";
  return c;
}

// Scores are affine in beta.
Check criterion4() {
  Check c;
  auto res = bench().resources();
  double worst = 0;
  for (const auto& t : bench().topics) {
    const auto q0 = gen_qr_ensemble(t, res, ensemble_cfg(10, 0.0));
    const auto q1 = gen_qr_ensemble(t, res, ensemble_cfg(10, 1.0));
    const auto qm = gen_qr_ensemble(t, res, ensemble_cfg(10, 0.25));
    for (const auto& d : bench().index.documents()) {
      const double s0 = bm25_score(bench().index, q0, d.doc_id);
      const double s1 = bm25_score(bench().index, q1, d.doc_id);
      const double sm = bm25_score(bench().index, qm, d.doc_id);
      worst = std::max(worst, std::fabs(sm - (s0 + 0.25 * (s1 - s0))));
    }
  }
  if (worst >= 1e-9) c.fail(fmt("max deviation %.3g", worst));
  if (c.ok) c.detail = fmt("20 queries, max deviation %.3g", worst);
  return c;
}

// RRF on hand fixtures and input permutations.
Check criterion5() {
  Check c;
  auto list = [](std::vector<std::string> ids) {
    std::vector<std::pair<std::string, double>> s;
    double v = 10;
    for (auto& id : ids) s.emplace_back(id, v--);
    return make_ranking("q", s, 0, "t");
  };
  const std::vector<Ranking> two{list({"a", "b"}), list({"b", "c"})};
  const auto f = rrf(two);
  const std::vector<std::pair<std::string, double>> want{{"b", 1.0 / 62 + 1.0 / 61}, {"a", 1.0 / 61}, {"c", 1.0 / 62}};
  if (f.size() != want.size()) c.fail("fixture size");
  for (std::size_t i = 0; i < want.size() && i < f.size(); ++i) {
    if (f.entries[i].doc_id != want[i].first || std::fabs(f.entries[i].score - want[i].second) >= 1e-12) {
      c.fail("fixture value");
    }
  }
  std::vector<Ranking> three{list({"a", "b", "c", "d"}), list({"d", "a", "e"}), list({"e", "c", "a", "f"})};
  const auto reference = rrf(three);
  std::vector<std::size_t> perm{0, 1, 2};
  do {
    const std::vector<Ranking> in{three[perm[0]], three[perm[1]], three[perm[2]]};
    if (rrf(in).entries != reference.entries) c.fail("3-list permutation changed result");
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<Ranking> swapped{two[1], two[0]};
  if (rrf(swapped).entries != f.entries) c.fail("2-list permutation changed result");
  if (c.ok) c.detail = "hand fixture within 1e-12, 2- and 3-list permutations identical";
  return c;
}

// Feedback prompt prefix.
Check criterion6() {
  Check c;
  const std::vector<Document> docs{{"d1", "aaa", 1}, {"d2", "bbb", 1}};
  const std::string want = "Based on the given context information aaa bbb, ";
  if (context_prefix(docs) != want) c.fail("prefix bytes differ");
  const auto prompt = build_qr_prompt("I", "q", PromptStyle::keyword_plain, std::span<const Document>(docs));
  if (prompt.rfind(want, 0) != 0) c.fail("prompt does not start with prefix");
  auto res = bench().resources();
  auto cfg = ensemble_cfg(2, 1.0);
  cfg.feedback = FeedbackMode::prf;
  cfg.feedback_depth = 3;
  for (const auto& r : run_method(bench().topics.front(), res, cfg).records) {
    if (r.prompt.rfind(std::string(k_context_lead), 0) != 0) c.fail("pipeline prompt lacks prefix");
  }
  if (c.ok) c.detail = "\"" + want + "\" reproduced byte for byte";
  return c;
}

// t distribution and Holm.
Check criterion7() {
  Check c;
  const double p = student_t_two_sided_p(2.262, 9);
  if (std::fabs(p - 0.05) >= 1e-3) c.fail(fmt("t=2.262 dof=9 gives p=%.5f", p));
  const std::vector<double> a{0.01, 0.03, 0.04};
  const std::vector<double> b{0.01, 0.02, 0.04};
  if (holm_bonferroni(a) != std::vector<bool>{true, false, false}) c.fail("Holm {.01,.03,.04}");
  if (holm_bonferroni(b) != std::vector<bool>{true, true, true}) c.fail("Holm {.01,.02,.04}");
  if (c.ok) c.detail = fmt("p(2.262, 9) = %.5f, Holm rejects 1 and 3", p);
  return c;
}

// Full bundled experiment twice, outputs byte-identical.
Check criterion8() {
  Check c;
  testutil::TempDir tmp;
  std::size_t files = 0;
  try {
    const auto spec_path = testutil::data_dir() / "synthetic" / "experiment.yaml";
    for (int i = 0; i < 2; ++i) {
      auto spec = load_spec(spec_path);
      spec.output_dir = tmp.path() / (i == 0 ? "a" : "b");
      spec.parallelism = i == 0 ? 1 : 4;
      spec.validate();
      run_experiment(spec);
      for (const auto& s : spec.sweeps) run_sweep(spec, s);
    }
    for (const auto& e : fs::recursive_directory_iterator(tmp.path() / "a")) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), tmp.path() / "a");
      const auto other = tmp.path() / "b" / rel;
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) c.fail(rel.string() + " differs");
      ++files;
    }
    std::size_t files_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(tmp.path() / "b")) files_b += e.is_regular_file();
    if (files_b != files) c.fail("file sets differ");
    for (const char* must : {"report.txt", "report.csv", "runs/bm25.run", "sweeps/beta_ensemble.csv"}) {
      if (!fs::exists(tmp.path() / "a" / must)) c.fail(std::string(must) + " missing");
    }
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
  if (c.ok) c.detail = std::to_string(files) + " output files identical across runs";
  return c;
}

double mean_measure(const RunFile& run, const std::string& measure) {
  return evaluate_run(run, bench().qrels, {parse_measure(measure)}).aggregate[0];
}

// Effectiveness on the synthetic benchmark.
Check criterion9() {
  Check c;
  auto res = bench().resources();
  PipelineConfig raw;
  raw.method = Method::raw;
  const auto cfg = ensemble_cfg(10, 1.0);
  const double r_raw = mean_measure(run_all([&](const Topic& t) { return run_method(t, res, raw).ranking; }), "recall@10");
  const double r_ens = mean_measure(run_all([&](const Topic& t) { return run_method(t, res, cfg).ranking; }), "recall@10");
  if (!(r_ens > r_raw)) c.fail(fmt("ensemble R@10 %.4f not above raw %.4f", r_ens, r_raw));

  auto fcfg = cfg;
  fcfg.method = Method::fusion;
  const double n_fusion = mean_measure(run_all([&](const Topic& t) { return run_method(t, res, fcfg).ranking; }), "ndcg@10");
  double worst = 1.0;
  for (const auto& instruction : bench().instructions.instructions) {
    InstructionSet one{"one", {instruction}, InstructionProvenance::user};
    PipelineResources r1{&bench().index, &one, &bench().generator, &bench().qrels};
    const auto c1 = ensemble_cfg(1, 1.0);
    worst = std::min(worst, mean_measure(run_all([&](const Topic& t) { return run_method(t, r1, c1).ranking; }), "ndcg@10"));
  }
  if (!(n_fusion >= worst)) c.fail(fmt("fusion nDCG@10 %.4f below worst single %.4f", n_fusion, worst));
  if (c.ok) {
    c.detail = fmt("R@10 ensemble %.4f > raw %.4f; ", r_ens, r_raw) +
               fmt("fusion nDCG@10 %.4f >= worst single %.4f", n_fusion, worst);
  }
  return c;
}

// File formats and the bundled instruction set.
Check criterion10() {
  Check c;
  const auto dir = testutil::data_dir() / "synthetic";
  const auto qrels_text = slurp(dir / "qrels.txt");
  if (format_qrels(parse_qrels(qrels_text)) != qrels_text) c.fail("qrels round trip");
  auto res = bench().resources();
  PipelineConfig raw;
  raw.method = Method::raw;
  const auto run_text = format_run(run_all([&](const Topic& t) { return run_method(t, res, raw).ranking; }));
  if (format_run(parse_run(run_text)) != run_text) c.fail("run round trip");
  try {
    parse_run("q1 Q0 d1 1 2.0 t\nq1 Q0 d2 x 1.0 t\n", "bad.run");
    c.fail("malformed run accepted");
  } catch (const ParseError& e) {
    if (e.line() != 2 || std::string(e.what()).find("bad.run:2") == std::string::npos) c.fail("run error line");
  }
  try {
    parse_qrels("q1 0 d1 1\nq1 0 d2\n", "bad.qrels");
    c.fail("malformed qrels accepted");
  } catch (const ParseError& e) {
    if (e.line() != 2) c.fail("qrels error line");
  }
  const auto set = load_instruction_set("general");
  if (set.size() != 10) c.fail("instruction set size " + std::to_string(set.size()));
  if (c.ok) c.detail = "run and qrels round trips, line-numbered errors, 10 bundled instructions";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::function<Check()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                     criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i]();
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s criterion %zu: %s\n", c.ok ? "PASS" : "FAIL", i + 1, c.detail.c_str());
    failures += !c.ok;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
