#include <gtest/gtest.h>

#include <deque>

#include "error.hpp"
#include "prompts.hpp"

using namespace qrkit;

namespace {

class ScriptedGenerator : public Generator {
 public:
  explicit ScriptedGenerator(std::deque<std::string> answers) : answers_(std::move(answers)) {}
  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    auto a = answers_.front();
    answers_.pop_front();
    return a;
  }
  std::vector<std::string> prompts;

 private:
  std::deque<std::string> answers_;
};

const std::string k_base = "Improve the search effectiveness by suggesting expansion terms for the query";

}  // namespace

TEST(Prompts, KeywordPlainIsInstructionColonQuery) {
  EXPECT_EQ(build_qr_prompt("Suggest terms", "do goldfish grow", PromptStyle::keyword_plain),
            "Suggest terms: do goldfish grow");
}

TEST(Prompts, KeywordChatAddsPreamble) {
  const auto p = build_qr_prompt("Suggest terms", "q", PromptStyle::keyword_chat);
  EXPECT_EQ(p, std::string(k_keyword_chat_preamble) + "\nSuggest terms: q");
}

TEST(Prompts, NaturalLanguageStyle) {
  const auto p = build_qr_prompt("Suggest terms", "do goldfish grow", PromptStyle::natural_language);
  EXPECT_NE(p.find("Do not explain yourself."), std::string::npos);
  EXPECT_EQ(p.find("comma separated keywords"), std::string::npos);
  EXPECT_EQ(p.find("Suggest terms"), std::string::npos);
  EXPECT_NE(p.find("do goldfish grow"), std::string::npos);
}

TEST(Prompts, ContextPrefixExactBytes) {
  const std::vector<Document> docs{{"d1", "aaa", 1}, {"d2", "bbb", 1}};
  EXPECT_EQ(context_prefix(docs), "Based on the given context information aaa bbb, ");
  const auto p = build_qr_prompt("I", "q", PromptStyle::keyword_plain, std::span<const Document>(docs));
  EXPECT_EQ(p, "Based on the given context information aaa bbb, I: q");
  const auto appended = build_qr_prompt("I", "q", PromptStyle::keyword_plain,
                                        std::span<const Document>(docs), ContextPosition::append);
  EXPECT_EQ(appended, "I: q Based on the given context information aaa bbb,");
}

TEST(Prompts, EmptyContextOrQueryRejected) {
  const std::vector<Document> none;
  EXPECT_THROW(build_qr_prompt("I", "q", PromptStyle::keyword_plain, std::span<const Document>(none)),
               ValidationError);
  EXPECT_THROW(build_qr_prompt("I", "  ", PromptStyle::keyword_plain), ValidationError);
}

TEST(Keywords, CommaModeNormalizes) {
  EXPECT_EQ(parse_keywords("Goldfish, growth rate,  tank size.\n3. Fish", KeywordMode::comma),
            (std::vector<std::string>{"goldfish", "growth rate", "tank size", "fish"}));
  EXPECT_EQ(parse_keywords("a, A, a", KeywordMode::comma), (std::vector<std::string>{"a"}));
  EXPECT_TRUE(parse_keywords(" , ,\n", KeywordMode::comma).empty());
}

TEST(Keywords, WhitespaceModeSplitsPhrases) {
  EXPECT_EQ(parse_keywords("growth rate, tank", KeywordMode::whitespace),
            (std::vector<std::string>{"growth", "rate", "tank"}));
}

TEST(Keywords, ParsingIsIdempotent) {
  for (auto raw : {"1. Alpha, beta gamma;\n- Delta!", "x,y , z", "\"quoted\", (paren)"}) {
    for (auto mode : {KeywordMode::comma, KeywordMode::whitespace}) {
      const auto once = parse_keywords(raw, mode);
      std::string joined;
      for (const auto& k : once) joined += (joined.empty() ? "" : ", ") + k;
      EXPECT_EQ(parse_keywords(joined, mode), once) << raw;
    }
  }
}

TEST(Filter, PromptAndParsing) {
  const auto p = build_filter_prompt("goldfish", {"tank", "bowl"});
  EXPECT_NE(p.find("Query: goldfish"), std::string::npos);
  EXPECT_NE(p.find("Keywords: tank, bowl"), std::string::npos);
  EXPECT_EQ(p.find('#'), std::string::npos);
  ScriptedGenerator g({"Tank"});
  EXPECT_EQ(apply_filter("goldfish", {"tank", "bowl"}, g), (std::vector<std::string>{"tank"}));
  EXPECT_THROW(build_filter_prompt("q", {}), ValidationError);
}

TEST(Verdicts, FinalStandaloneToken) {
  EXPECT_EQ(parse_verdict("A"), Verdict::a);
  EXPECT_EQ(parse_verdict("The better one is B."), Verdict::b);
  EXPECT_EQ(parse_verdict("Answer: A"), Verdict::a);
  EXPECT_EQ(parse_verdict("BA"), Verdict::undecided);
  EXPECT_EQ(parse_verdict(""), Verdict::undecided);
}

TEST(Verdicts, BothOrdersAgreeOrAreInconsistent) {
  ScriptedGenerator consistent({"A", "B"});
  auto j = judge_pair_both_orders("q", "first", "second", consistent);
  EXPECT_EQ(j.outcome, PairOutcome::a_preferred);
  ASSERT_EQ(consistent.prompts.size(), 2u);
  EXPECT_LT(consistent.prompts[0].find("first"), consistent.prompts[0].find("second"));
  EXPECT_GT(consistent.prompts[1].find("first"), consistent.prompts[1].find("second"));

  ScriptedGenerator positional({"A", "A"});
  EXPECT_EQ(judge_pair_both_orders("q", "x", "y", positional).outcome,
            PairOutcome::position_inconsistent);
  ScriptedGenerator b_wins({"B", "A"});
  EXPECT_EQ(judge_pair_both_orders("q", "x", "y", b_wins).outcome, PairOutcome::b_preferred);
  ScriptedGenerator unsure({"maybe", "A"});
  EXPECT_EQ(judge_pair_both_orders("q", "x", "y", unsure).outcome,
            PairOutcome::position_inconsistent);
}

TEST(InstructionSets, BundledGeneralSet) {
  const auto set = load_instruction_set("general");
  ASSERT_EQ(set.size(), 10u);
  EXPECT_EQ(set.base(), k_base);
  EXPECT_EQ(set.provenance, InstructionProvenance::bundled);
  EXPECT_NO_THROW(set.validate());
  const auto names = bundled_instruction_set_names();
  EXPECT_NE(std::find(names.begin(), names.end(), "domain_touche"), names.end());
}

TEST(InstructionSets, ParseAndValidate) {
  const auto set = parse_instruction_set("# c\nfirst\n\nsecond\n", "x", InstructionProvenance::user);
  EXPECT_EQ(set.instructions, (std::vector<std::string>{"first", "second"}));
  EXPECT_THROW(parse_instruction_set("a  b\na b\n", "x", InstructionProvenance::user), ValidationError);
  EXPECT_THROW(load_instruction_set("no_such_set"), Error);
  EXPECT_EQ(parse_instruction_set(format_instruction_set(set), "x", InstructionProvenance::user)
                .instructions,
            set.instructions);
}

TEST(Paraphrase, SingleInstructionMakesNoCall) {
  ScriptedGenerator g({});
  const auto set = paraphrase_instructions(k_base, 1, g);
  EXPECT_EQ(set.instructions, (std::vector<std::string>{k_base}));
  EXPECT_TRUE(g.prompts.empty());
}

TEST(Paraphrase, NumberedListIsParsed) {
  std::string raw = "Here are some paraphrases:\n";
  for (int i = 1; i <= 10; ++i) raw += std::to_string(i) + ". \"Variant number " + std::to_string(i) + "\"\n";
  ScriptedGenerator g({raw});
  const auto set = paraphrase_instructions(k_base, 10, g);
  ASSERT_EQ(set.size(), 10u);
  EXPECT_EQ(set.base(), k_base);
  EXPECT_EQ(set.instructions[1], "Variant number 1");
  EXPECT_EQ(set.instructions[9], "Variant number 9");
  EXPECT_EQ(g.prompts[0], build_paraphrase_prompt(k_base, 10));
  EXPECT_EQ(parse_paraphrases(raw).size(), 10u);
}

TEST(Paraphrase, TooFewIsAnError) {
  ScriptedGenerator g({"only one"});
  EXPECT_THROW(paraphrase_instructions(k_base, 3, g), GenerationError);
}

TEST(Records, JsonLine) {
  ReformulationRecord r{"q1", 2, "p", "raw", {"a"}, std::nullopt, std::nullopt};
  EXPECT_EQ(to_json_line(r),
            R"({"qid":"q1","instruction_index":2,"prompt":"p","raw_generation":"raw","keywords":["a"]})");
}
