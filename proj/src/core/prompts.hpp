#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "generation.hpp"
#include "index.hpp"

namespace qrkit {

enum class InstructionProvenance { bundled, paraphrased, user };

/// Ordered instructions; the first is the base the others paraphrase.
struct InstructionSet {
  std::string name;
  std::vector<std::string> instructions;
  InstructionProvenance provenance = InstructionProvenance::user;

  std::size_t size() const noexcept { return instructions.size(); }
  const std::string& base() const { return instructions.at(0); }
  /// N >= 1 and instructions pairwise distinct after whitespace normalization.
  void validate() const;
};

std::string_view to_string(InstructionProvenance provenance);

/// One instruction per line; blank lines and '#' comments are skipped.
InstructionSet parse_instruction_set(std::string_view content, std::string name,
                                     InstructionProvenance provenance);
/// `name_or_path` is either a readable file or the name of a bundled set
/// (e.g. "general", "domain_touche").
InstructionSet load_instruction_set(const std::string& name_or_path);
std::vector<std::string> bundled_instruction_set_names();
std::string format_instruction_set(const InstructionSet& set);

std::string build_paraphrase_prompt(std::string_view base, std::size_t count);
/// One paraphrase per nonempty line, with list numbering, bullets and
/// surrounding quotes removed. Lines ending in ':' are treated as headers.
std::vector<std::string> parse_paraphrases(std::string_view raw);
/// Returns base + the first n-1 distinct paraphrases. n == 1 makes no call.
InstructionSet paraphrase_instructions(const std::string& base, std::size_t n,
                                       Generator& generator, std::string name = "paraphrased");

enum class PromptStyle { keyword_plain, keyword_chat, natural_language };
enum class ContextPosition { prepend, append };

PromptStyle parse_prompt_style(std::string_view name);
std::string_view to_string(PromptStyle style);

inline constexpr std::string_view k_keyword_chat_preamble =
    "You are a helpful assistant who directly provides comma separated keywords or expansion "
    "terms. Provide as many expansion terms or keywords as possible related to the query. And do "
    "not explain yourself.";
inline constexpr std::string_view k_natural_language_preamble =
    "You are a helpful assistant who directly provides a natural language reformulated query "
    "with novel keywords related to the user's original query. Do not explain yourself. Just "
    "return a natural language query.";
inline constexpr std::string_view k_context_lead = "Based on the given context information ";

/// "Based on the given context information {C}, " where C joins the document
/// texts with single spaces in the given order.
std::string context_prefix(std::span<const Document> docs);

/// Renders a reformulation prompt. `context` (feedback documents) must not be
/// an empty list when present.
std::string build_qr_prompt(std::string_view instruction, std::string_view query, PromptStyle style,
                            std::optional<std::span<const Document>> context = std::nullopt,
                            ContextPosition position = ContextPosition::prepend);

enum class KeywordMode { comma, whitespace };
KeywordMode parse_keyword_mode(std::string_view name);
std::string_view to_string(KeywordMode mode);

/// Splits generated text into normalized keywords: trimmed of whitespace,
/// punctuation and list numbering, lowercased, deduplicated in order.
std::vector<std::string> parse_keywords(std::string_view raw, KeywordMode mode);

std::string filter_template();
std::string build_filter_prompt(std::string_view query, const std::vector<std::string>& keywords);
std::vector<std::string> apply_filter(std::string_view query,
                                      const std::vector<std::string>& keywords,
                                      Generator& generator);

std::string build_interpretability_prompt(std::string_view original_query,
                                          std::string_view reformulation_a,
                                          std::string_view reformulation_b);

enum class Verdict { a, b, undecided };
/// Reads the final standalone "A" or "B" token of a judge answer.
Verdict parse_verdict(std::string_view text);

enum class PairOutcome { a_preferred, b_preferred, position_inconsistent };

struct PairJudgement {
  PairOutcome outcome = PairOutcome::position_inconsistent;
  Verdict forward = Verdict::undecided;   // a shown as A
  Verdict reversed = Verdict::undecided;  // a shown as B
  std::string forward_prompt;
  std::string reversed_prompt;
};

/// Asks the judge twice with the two reformulations swapped.
PairJudgement judge_pair_both_orders(std::string_view original_query,
                                     std::string_view reformulation_a,
                                     std::string_view reformulation_b, Generator& judge);
std::string_view to_string(PairOutcome outcome);

struct ReformulationRecord {
  std::string qid;
  int instruction_index = 0;  // 1-based
  std::string prompt;
  std::string raw_generation;
  std::vector<std::string> keywords;
  std::optional<std::vector<std::string>> filtered;
  std::optional<std::string> filter_raw;

  bool operator==(const ReformulationRecord&) const = default;
};

std::string to_json_line(const ReformulationRecord& record);

}  // namespace qrkit
