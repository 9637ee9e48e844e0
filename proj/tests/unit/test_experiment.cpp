#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "error.hpp"
#include "experiment.hpp"
#include "text.hpp"
#include "unit/helpers.hpp"

using namespace qrkit;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_header() {
  const auto dir = (testutil::data_dir() / "synthetic").string();
  return "corpus: " + dir + "/corpus.jsonl\ntopics: " + dir + "/topics.tsv\nqrels: " + dir +
         "/qrels.txt\n";
}

ExperimentSpec small_spec(const std::filesystem::path& out) {
  auto spec = parse_spec(data_header() +
                             "metrics: [ndcg@10, recall@10]\n"
                             "variants:\n"
                             "  - {name: bm25, method: raw}\n"
                             "  - {name: ensemble, method: ensemble, n_instructions: 3}\n"
                             "  - {name: fusion, method: fusion, n_instructions: 3}\n",
                         out.parent_path());
  spec.output_dir = out;
  return spec;
}

std::string collapse(std::string_view s) { return text::collapse_whitespace(s); }

class FailingGenerator : public Generator {
 public:
  explicit FailingGenerator(std::vector<std::string> poison) : poison_(std::move(poison)) {}
  std::string complete(const std::string& prompt) override {
    for (const auto& p : poison_) {
      if (prompt.find(p) != std::string::npos) throw GenerationError("synthetic outage");
    }
    return mock_complete(prompt, 42);
  }

 private:
  std::vector<std::string> poison_;
};

}  // namespace

TEST(Spec, MinimalSpecGetsDefaults) {
  testutil::TempDir dir;
  const auto spec = parse_spec(data_header(), dir.path());
  ASSERT_EQ(spec.variants.size(), 2u);
  EXPECT_EQ(spec.variants[0].config.method, Method::raw);
  EXPECT_EQ(spec.variants[1].config.method, Method::ensemble);
  EXPECT_EQ(spec.baseline, spec.variants[0].name);
  EXPECT_EQ(spec.measures.size(), 6u);
  EXPECT_EQ(spec.seed, 42);
  EXPECT_EQ(spec.output_dir, dir.path() / "out");
  EXPECT_EQ(spec.variants[1].config.beta, 1.0);
  EXPECT_EQ(spec.variants[1].config.k_rrf, 60.0);
  EXPECT_NO_THROW(spec.validate());
}

TEST(Spec, RelativePathsResolveAgainstSpecDir) {
  const auto spec = load_spec(testutil::data_dir() / "synthetic" / "experiment.yaml");
  EXPECT_EQ(spec.corpus, testutil::data_dir() / "synthetic" / "corpus.jsonl");
  EXPECT_EQ(spec.variants.size(), 9u);
  EXPECT_EQ(spec.sweeps.size(), 3u);
  EXPECT_NO_THROW(spec.validate());
}

TEST(Spec, OutOfRangeBetaNamesFieldAndBound) {
  testutil::TempDir dir;
  try {
    parse_spec(data_header() + "variants:\n  - {name: e, method: ensemble, beta: 1.5}\n", dir.path())
        .validate();
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("beta"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[0, 1]"), std::string::npos) << msg;
  }
}

TEST(Spec, BaselineMustBeAVariant) {
  testutil::TempDir dir;
  EXPECT_THROW(parse_spec(data_header() + "baseline: nope\n", dir.path()).validate(), ValidationError);
}

TEST(Spec, UnknownKeysRejected) {
  testutil::TempDir dir;
  EXPECT_THROW(parse_spec(data_header() + "colour: blue\n", dir.path()), Error);
  EXPECT_THROW(parse_spec(data_header() + "variants:\n  - {name: x, method: raw, bogus: 1}\n", dir.path()),
               Error);
  EXPECT_THROW(parse_spec("corpus: [unclosed\n", dir.path()), ParseError);
}

TEST(Spec, MissingPathsReportedTogether) {
  testutil::TempDir dir;
  try {
    parse_spec("corpus: a.jsonl\ntopics: b.tsv\nqrels: c.txt\n", dir.path()).validate();
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a.jsonl"), std::string::npos);
    EXPECT_NE(msg.find("b.tsv"), std::string::npos);
    EXPECT_NE(msg.find("c.txt"), std::string::npos);
  }
}

TEST(ToolConfigParse, Keys) {
  const auto c = parse_tool_config(
      "seed: 7\ninstructions: domain_touche\npipeline: {method: fusion, n_instructions: 1}\n"
      "generator: {provider: mock}\n");
  EXPECT_EQ(c.seed, 7);
  EXPECT_EQ(c.instructions, "domain_touche");
  EXPECT_EQ(c.pipeline.method, Method::fusion);
  EXPECT_THROW(parse_tool_config("nonsense: 1\n"), Error);
}

TEST(Experiment, RepeatedRunsAreByteIdentical) {
  testutil::TempDir dir;
  const auto a = run_experiment(small_spec(dir.path() / "a"));
  auto spec_b = small_spec(dir.path() / "b");
  spec_b.parallelism = 4;
  const auto b = run_experiment(spec_b);
  EXPECT_EQ(a.report_text, b.report_text);
  EXPECT_EQ(a.report_csv, b.report_csv);
  EXPECT_EQ(a.per_query_csv, b.per_query_csv);
  for (const char* f : {"runs/bm25.run", "runs/ensemble.run", "runs/fusion.run",
                        "provenance/ensemble.jsonl", "report.txt", "report.csv", "per_query.csv"}) {
    EXPECT_EQ(slurp(dir.path() / "a" / f), slurp(dir.path() / "b" / f)) << f;
    EXPECT_FALSE(slurp(dir.path() / "a" / f).empty()) << f;
  }
  EXPECT_TRUE(a.failed_qids.empty());
  EXPECT_EQ(a.query_count, 20u);
  EXPECT_NE(a.report_text.find("nDCG@10"), std::string::npos);
}

TEST(Experiment, ComparisonsAgainstBaseline) {
  testutil::TempDir dir;
  const auto r = run_experiment(small_spec(dir.path() / "o"));
  // Two non-baseline variants times two measures.
  ASSERT_EQ(r.comparisons.size(), 4u);
  for (const auto& c : r.comparisons) {
    EXPECT_NE(c.variant, "bm25");
    if (c.tested) {
      EXPECT_EQ(c.test.n, 20u);
      EXPECT_GE(c.test.p, 0.0);
      EXPECT_LE(c.test.p, 1.0);
    }
  }
}

TEST(Experiment, FailedQueriesAreSkippedEverywhere) {
  testutil::TempDir dir;
  auto gen = std::make_shared<FailingGenerator>(std::vector<std::string>{"violin"});
  const auto r = run_experiment(small_spec(dir.path() / "o"), gen);
  EXPECT_EQ(r.failed_qids, (std::vector<std::string>{"q02"}));
  for (const auto& v : r.variants) {
    for (const auto& ranking : v.run) EXPECT_NE(ranking.qid, "q02") << v.name;
    for (const auto& q : v.report.per_query) EXPECT_NE(q.qid, "q02");
  }
  EXPECT_NE(slurp(dir.path() / "o" / "failures.txt").find("q02"), std::string::npos);
}

TEST(Experiment, AbortsPastFailureBudget) {
  testutil::TempDir dir;
  auto gen = std::make_shared<FailingGenerator>(
      std::vector<std::string>{"violin", "sourdough", "glacier"});
  EXPECT_THROW(run_experiment(small_spec(dir.path() / "o"), gen), Error);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "o" / "failures.txt"));
}

TEST(Sweep, DegenerateValuesMatchVariants) {
  testutil::TempDir dir;
  auto spec = small_spec(dir.path() / "o");
  const auto base = run_experiment(spec);
  auto agg = [&](const std::string& name) {
    for (const auto& v : base.variants) {
      if (v.name == name) return v.report.aggregate;
    }
    return std::vector<double>{};
  };
  const auto beta = run_sweep(spec, {SweepAxis::beta, "ensemble", {0.5}});
  EXPECT_EQ(beta.values, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(beta.rows.front(), agg("bm25"));
  EXPECT_EQ(beta.rows.back(), agg("ensemble"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "o" / "sweeps" / "beta_ensemble.csv"));
  EXPECT_TRUE(text::starts_with(beta.csv, "beta,ndcg@10,recall@10\n"));

  const auto n = run_sweep(spec, {SweepAxis::n_instructions, "ensemble", {3, 1}});
  EXPECT_EQ(n.values, (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(n.rows.back(), agg("ensemble"));
  EXPECT_THROW(run_sweep(spec, {SweepAxis::n_instructions, "ensemble", {1.5}}), ValidationError);
  EXPECT_THROW(run_sweep(spec, {SweepAxis::beta, "bm25", {0.5}}), ValidationError);
}

TEST(Sweep, NormalizeValues) {
  EXPECT_EQ(normalize_sweep_values(SweepAxis::beta, {0.5, 0.5, 0.2}),
            (std::vector<double>{0.0, 0.2, 0.5, 1.0}));
  EXPECT_EQ(normalize_sweep_values(SweepAxis::feedback_m, {3, 0, 3}), (std::vector<double>{0, 3}));
  EXPECT_EQ(parse_sweep_axis("m"), SweepAxis::feedback_m);
  EXPECT_EQ(parse_sweep_axis("n"), SweepAxis::n_instructions);
}

TEST(ReferenceTables, BaselineRowRendersStoredValues) {
  const auto table = render_reference_table(slurp(testutil::data_dir() / "reference_values" / "bm25_baselines.csv"));
  bool found = false;
  for (auto line : text::split_lines(table)) {
    const auto c = collapse(line);
    if (text::starts_with(c, "BM25 ")) {
      EXPECT_EQ(c, "BM25 .480 .642 .426 .434 .154 .260 .454 .321 .297");
      found = true;
    }
  }
  EXPECT_TRUE(found) << table;
  EXPECT_EQ(table.find("# "), std::string::npos);
  EXPECT_FALSE(render_reference_tables(testutil::data_dir() / "reference_values").empty());
  EXPECT_THROW(render_reference_table("a,b\n\"x\",y\n"), Error);
}

TEST(Format, AlignsByCodePoints) {
  EXPECT_EQ(format_aligned({{"a", "bb"}, {"ccc†", "d"}}), "a     bb\nccc†  d\n");
}
