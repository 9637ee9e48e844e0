#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "error.hpp"
#include "fusion.hpp"
#include "ranking.hpp"

using namespace qrkit;

namespace {

Ranking list(std::vector<std::string> ids, const std::string& tag = "t") {
  std::vector<std::pair<std::string, double>> scored;
  double s = static_cast<double>(ids.size());
  for (auto& id : ids) scored.emplace_back(id, s--);
  return make_ranking("q", scored, 0, tag);
}

std::vector<std::string> ids(const Ranking& r) {
  std::vector<std::string> out;
  for (const auto& e : r.entries) out.push_back(e.doc_id);
  return out;
}

}  // namespace

TEST(Rrf, HandFixture) {
  const std::vector<Ranking> in{list({"a", "b"}), list({"b", "c"})};
  const auto fused = rrf(in);
  EXPECT_EQ(ids(fused), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_NEAR(fused.entries[0].score, 1.0 / 62 + 1.0 / 61, 1e-12);
  EXPECT_NEAR(fused.entries[1].score, 1.0 / 61, 1e-12);
  EXPECT_NEAR(fused.entries[2].score, 1.0 / 62, 1e-12);
}

TEST(Rrf, SingleListKeepsOrderWithReciprocalScores) {
  const std::vector<Ranking> in{list({"x", "y", "z"})};
  const auto fused = rrf(in);
  EXPECT_EQ(ids(fused), (std::vector<std::string>{"x", "y", "z"}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fused.entries[i].score, 1.0 / (61 + i), 1e-15);
}

TEST(Rrf, ImputedMissingRank) {
  FusionOptions o;
  o.missing = MissingRank::impute;
  const std::vector<Ranking> in{list({"a", "b"}), list({"b", "c"})};
  const auto fused = rrf(in, o);
  // a: 1/61 + 1/63, b: 1/62 + 1/61, c: 1/63 + 1/62
  EXPECT_EQ(ids(fused), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_NEAR(fused.entries[1].score, 1.0 / 61 + 1.0 / 63, 1e-12);
  EXPECT_NEAR(fused.entries[2].score, 1.0 / 63 + 1.0 / 62, 1e-12);
}

TEST(Rrf, PermutationInvariance) {
  const std::vector<Ranking> base{list({"a", "b", "c", "d"}), list({"d", "e", "a"}),
                                  list({"f", "a", "c"})};
  for (FusionMethod m : {FusionMethod::rrf, FusionMethod::score_sum, FusionMethod::score_max}) {
    std::vector<std::size_t> order{0, 1, 2};
    const auto reference = fuse(base, m);
    do {
      std::vector<Ranking> permuted;
      for (auto i : order) permuted.push_back(base[i]);
      EXPECT_EQ(fuse(permuted, m).entries, reference.entries);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST(Rrf, UnionAndScoreBound) {
  const std::vector<Ranking> in{list({"a", "b", "c"}), list({"c", "d"}), list({"e"})};
  const auto fused = rrf(in);
  std::set<std::string> expected{"a", "b", "c", "d", "e"};
  const auto got = ids(fused);
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), expected);
  EXPECT_EQ(fused.size(), expected.size());
  for (const auto& e : fused.entries) {
    EXPECT_GT(e.score, 0.0);
    EXPECT_LE(e.score, 3.0 / 61.0);
  }
}

TEST(ScoreFusion, HandSumAndMax) {
  const std::vector<Ranking> in{make_ranking("q", {{"a", 2.0}}, 0, "t"),
                                make_ranking("q", {{"a", 1.0}, {"b", 2.5}}, 0, "t")};
  const auto sum = score_fuse(in, FusionMethod::score_sum);
  EXPECT_EQ(ids(sum), (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(sum.entries[0].score, 3.0);
  EXPECT_DOUBLE_EQ(sum.entries[1].score, 2.5);
  const auto max = score_fuse(in, FusionMethod::score_max);
  EXPECT_EQ(ids(max), (std::vector<std::string>{"b", "a"}));
  EXPECT_DOUBLE_EQ(max.entries[1].score, 2.0);
}

TEST(ScoreFusion, IdenticalListsDoubleScores) {
  const auto l = make_ranking("q", {{"a", 3.0}, {"b", 1.5}}, 0, "t");
  const std::vector<Ranking> in{l, l};
  const auto sum = score_fuse(in, FusionMethod::score_sum);
  EXPECT_EQ(ids(sum), ids(l));
  EXPECT_DOUBLE_EQ(sum.entries[0].score, 6.0);
  EXPECT_DOUBLE_EQ(sum.entries[1].score, 3.0);
}

TEST(ScoreFusion, SingleListIsIdentityForEveryMethod) {
  const auto l = make_ranking("q", {{"a", 3.0}, {"b", 1.5}, {"c", 0.5}}, 0, "t");
  for (FusionMethod m : {FusionMethod::rrf, FusionMethod::score_sum, FusionMethod::score_max}) {
    EXPECT_EQ(ids(fuse(std::vector<Ranking>{l}, m)), ids(l));
  }
}

TEST(Fusion, CutoffAndTag) {
  FusionOptions o;
  o.cutoff = 2;
  o.run_tag = "fused";
  const std::vector<Ranking> in{list({"a", "b", "c"}), list({"c", "b"})};
  const auto fused = rrf(in, o);
  EXPECT_EQ(fused.size(), 2u);
  EXPECT_EQ(fused.run_tag, "fused");
}

TEST(Fusion, RejectsMixedQueriesAndEmptyInput) {
  Ranking a = list({"a"});
  Ranking b = list({"b"});
  b.qid = "other";
  EXPECT_THROW(rrf(std::vector<Ranking>{a, b}), ValidationError);
  EXPECT_THROW(rrf(std::vector<Ranking>{}), ValidationError);
}

TEST(Fusion, RunsFuseQueryByQuery) {
  Ranking q2 = list({"z"});
  q2.qid = "q2";
  const std::vector<RunFile> runs{{list({"a", "b"})}, {list({"b", "c"}), q2}};
  const auto fused = fuse_runs(runs, FusionMethod::rrf);
  ASSERT_EQ(fused.size(), 2u);
  EXPECT_EQ(ids(fused[0]), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(fused[1].qid, "q2");
}

TEST(Fusion, MethodNames) {
  EXPECT_EQ(parse_fusion_method("rrf"), FusionMethod::rrf);
  EXPECT_EQ(parse_fusion_method("sum"), FusionMethod::score_sum);
  EXPECT_EQ(parse_fusion_method("score_max"), FusionMethod::score_max);
  EXPECT_THROW(parse_fusion_method("borda"), ValidationError);
}
