#include <gtest/gtest.h>

#include "diag.hpp"
#include "error.hpp"
#include "helpers.hpp"
#include "ranking.hpp"
#include "text.hpp"
#include "trec_io.hpp"

using namespace qrkit;

TEST(RunFormat, ThreeLineRoundTripIsByteIdentical) {
  const std::string content =
      "q1 Q0 d3 1 12.500000 bm25\n"
      "q1 Q0 d1 2 3.250000 bm25\n"
      "q2 Q0 d7 1 0.125000 bm25\n";
  EXPECT_EQ(format_run(parse_run(content)), content);
}

TEST(RunFormat, FileRoundTrip) {
  testutil::TempDir dir;
  RunFile run{make_ranking("q1", {{"a", 2.0}, {"b", 1.0}}, 0, "t"),
              make_ranking("q2", {{"c", 0.5}}, 0, "t")};
  write_run(dir / "x.run", run);
  EXPECT_EQ(read_run(dir / "x.run"), run);
}

TEST(RunFormat, RankGapIsRejectedWithLineNumber) {
  try {
    parse_run("q1 Q0 a 1 2.0 t\nq1 Q0 b 3 1.0 t\n", "gap.run");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("gap.run:2"), std::string::npos);
  }
}

TEST(RunFormat, MalformedLinesRejected) {
  EXPECT_THROW(parse_run("q1 Q0 a 1\n"), ParseError);
  EXPECT_THROW(parse_run("q1 Q0 a one 1.0 t\n"), ParseError);
  EXPECT_THROW(parse_run("q1 Q0 a 1 nan_or_text t\n"), ParseError);
  EXPECT_THROW(parse_run("q1 Q0 a 1 2.0 t\nq1 Q0 a 2 1.0 t\n"), ParseError);
}

TEST(QrelsFormat, RoundTripIsByteIdentical) {
  const std::string content = "q1 0 d1 2\nq1 0 d2 0\nq2 0 d9 1\n";
  EXPECT_EQ(format_qrels(parse_qrels(content)), content);
}

TEST(QrelsFormat, NegativeGradeClampedWithWarning) {
  std::vector<std::string> warnings;
  diag::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const auto qrels = read_qrels((testutil::source_dir() / "tests/fixtures/qrels_with_negative.txt").string());
  diag::set_warning_sink({});
  EXPECT_EQ(qrels.grade("301", "FBIS3-10243"), 0);
  EXPECT_EQ(qrels.grade("302", "LA010189-0018"), 0);
  EXPECT_EQ(qrels.grade("302", "FBIS3-10497"), 2);
  EXPECT_FALSE(warnings.empty());
}

TEST(QrelsFormat, MalformedLinesRejectedWithLineNumber) {
  try {
    parse_qrels("q1 0 d1 1\nq1 0 d2\n", "bad.qrels");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_qrels("q1 0 d1 x\n"), ParseError);
  EXPECT_THROW(parse_qrels("q1 0 d1 1\nq1 0 d1 2\n"), ParseError);
}

TEST(Topics, ParseAndFormat) {
  const std::string content = "q1\tdo goldfish grow\nq2\tsolar panels\n";
  const auto topics = parse_topics(content);
  ASSERT_EQ(topics.size(), 2u);
  EXPECT_EQ(topics[0].title, "do goldfish grow");
  EXPECT_EQ(format_topics(topics), content);
  EXPECT_THROW(parse_topics("q1\ta\nq1\tb\n"), ParseError);
  EXPECT_THROW(parse_topics("no tab here\n"), ParseError);
}

TEST(Ranking, MakeRankingOrdersAndCuts) {
  const auto r = make_ranking("q", {{"b", 1.0}, {"a", 1.0}, {"c", 3.0}}, 2, "t");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.entries[0].doc_id, "c");
  EXPECT_EQ(r.entries[1].doc_id, "a");
  EXPECT_EQ(r.entries[1].rank, 2);
}
