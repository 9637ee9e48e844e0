#include "prompts.hpp"

#include <filesystem>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "resources.hpp"
#include "text.hpp"

namespace qrkit {
namespace {

constexpr std::string_view k_provenance_tag = "# provenance: ";

constexpr std::string_view k_interpretability_template =
    "Which one of the following query reformulations for the original query {query} is more "
    "interpretable and easy to comprehend and understand for a reader. First analyze both the "
    "reformulations and provide a short explanation why one is more interpretable than the other "
    "and then specify reformulation A or reformulation B as your final option\n"
    "Reformulation A: {a}\n"
    "Reformulation B: {b}\n"
    "Specify either A or B.";

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && !text::is_ascii_alnum(c) && !text::is_space(c) && c >= 0x21;
}

std::string_view trim_punct(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  auto strip = [](unsigned char c) { return is_ascii_punct(c) || text::is_space(c); };
  while (b < e && strip(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && strip(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// "12." / "3)" list markers, but not "1.5".
std::string_view strip_numbering(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i == 0 || i >= s.size() || (s[i] != '.' && s[i] != ')')) return s;
  if (i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '9') return s;
  return s.substr(i + 1);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string strip_quotes(std::string s) {
  static const std::vector<std::string> quotes = {"\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                  "\xE2\x80\x98", "\xE2\x80\x99"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (const auto& q : quotes) {
      if (text::starts_with(s, q)) {
        s = s.substr(q.size());
        changed = true;
      }
      if (s.size() >= q.size() && s.compare(s.size() - q.size(), q.size(), q) == 0) {
        s.resize(s.size() - q.size());
        changed = true;
      }
    }
    s = std::string(text::trim(s));
  }
  return s;
}

Verdict verdict_token(std::string_view token) {
  auto t = trim_punct(token);
  if (t == "A") return Verdict::a;
  if (t == "B") return Verdict::b;
  return Verdict::undecided;
}

}  // namespace

std::string_view to_string(InstructionProvenance provenance) {
  switch (provenance) {
    case InstructionProvenance::bundled: return "bundled";
    case InstructionProvenance::paraphrased: return "paraphrased";
    case InstructionProvenance::user: return "user";
  }
  return "user";
}

void InstructionSet::validate() const {
  if (instructions.empty()) throw ValidationError("instruction set '" + name + "' is empty");
  std::unordered_set<std::string> seen;
  for (const auto& i : instructions) {
    auto norm = text::collapse_whitespace(i);
    if (norm.empty()) throw ValidationError("instruction set '" + name + "' has a blank entry");
    if (!seen.insert(norm).second) {
      throw ValidationError("instruction set '" + name + "' repeats '" + norm + "'");
    }
  }
}

InstructionSet parse_instruction_set(std::string_view content, std::string name,
                                     InstructionProvenance provenance) {
  InstructionSet set{std::move(name), {}, provenance};
  for (auto line : text::split_lines(content)) {
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (text::starts_with(t, k_provenance_tag)) {
        auto value = text::trim(t.substr(k_provenance_tag.size()));
        if (value == "paraphrased") set.provenance = InstructionProvenance::paraphrased;
        if (value == "bundled") set.provenance = InstructionProvenance::bundled;
      }
      continue;
    }
    set.instructions.emplace_back(t);
  }
  set.validate();
  return set;
}

InstructionSet load_instruction_set(const std::string& name_or_path) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(name_or_path, ec)) {
    return parse_instruction_set(text::read_file(name_or_path),
                                 std::filesystem::path(name_or_path).stem().string(),
                                 InstructionProvenance::user);
  }
  if (auto bundled = find_bundled_resource("instructions/" + name_or_path + ".txt")) {
    return parse_instruction_set(*bundled, name_or_path, InstructionProvenance::bundled);
  }
  throw ValidationError("instruction set '" + name_or_path +
                        "' is neither a file nor a bundled set");
}

std::vector<std::string> bundled_instruction_set_names() {
  std::vector<std::string> names;
  const std::string_view dir = "instructions/";
  for (auto name : bundled_resource_names()) {
    if (text::starts_with(name, dir) && name.size() > dir.size() + 4) {
      auto stem = name.substr(dir.size());
      names.emplace_back(stem.substr(0, stem.size() - 4));
    }
  }
  return names;
}

std::string format_instruction_set(const InstructionSet& set) {
  std::string out = "# instruction set: " + set.name + "\n";
  out += std::string(k_provenance_tag) + std::string(to_string(set.provenance)) + "\n";
  for (const auto& i : set.instructions) out += i + "\n";
  return out;
}

std::string build_paraphrase_prompt(std::string_view base, std::size_t count) {
  return "Generate " + std::to_string(count) + " paraphrases for the following instruction: " +
         std::string(base);
}

std::vector<std::string> parse_paraphrases(std::string_view raw) {
  std::vector<std::string> out;
  for (auto line : text::split_lines(raw)) {
    std::string_view t = text::trim(line);
    for (std::string_view bullet : {"-", "*", "\xE2\x80\xA2"}) {
      if (text::starts_with(t, bullet)) t = text::trim(t.substr(bullet.size()));
    }
    t = text::trim(strip_numbering(t));
    auto cleaned = text::collapse_whitespace(strip_quotes(std::string(t)));
    if (cleaned.empty() || cleaned.back() == ':') continue;
    out.push_back(std::move(cleaned));
  }
  return out;
}

InstructionSet paraphrase_instructions(const std::string& base, std::size_t n,
                                       Generator& generator, std::string name) {
  if (n < 1) throw ValidationError("paraphrase count n must be >= 1");
  if (text::trim(base).empty()) throw ValidationError("base instruction must be nonempty");
  InstructionSet set{std::move(name), {text::collapse_whitespace(base)},
                     InstructionProvenance::paraphrased};
  if (n == 1) return set;
  auto raw = complete(generator, build_paraphrase_prompt(set.base(), n));
  std::unordered_set<std::string> seen{set.base()};
  for (auto& p : parse_paraphrases(raw)) {
    if (set.instructions.size() == n) break;
    if (seen.insert(p).second) set.instructions.push_back(std::move(p));
  }
  if (set.instructions.size() < n) {
    throw GenerationError("paraphrase generation produced " +
                          std::to_string(set.instructions.size() - 1) + " usable paraphrases, " +
                          std::to_string(n - 1) + " needed");
  }
  return set;
}

PromptStyle parse_prompt_style(std::string_view name) {
  if (name == "keyword_plain") return PromptStyle::keyword_plain;
  if (name == "keyword_chat") return PromptStyle::keyword_chat;
  if (name == "natural_language") return PromptStyle::natural_language;
  throw ValidationError("unknown prompt style '" + std::string(name) +
                        "' (expected keyword_plain, keyword_chat or natural_language)");
}

std::string_view to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::keyword_plain: return "keyword_plain";
    case PromptStyle::keyword_chat: return "keyword_chat";
    case PromptStyle::natural_language: return "natural_language";
  }
  return "keyword_plain";
}

std::string context_prefix(std::span<const Document> docs) {
  std::string out(k_context_lead);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) out += ' ';
    out += docs[i].text;
  }
  out += ", ";
  return out;
}

std::string build_qr_prompt(std::string_view instruction, std::string_view query, PromptStyle style,
                            std::optional<std::span<const Document>> context,
                            ContextPosition position) {
  if (text::trim(query).empty()) throw ValidationError("query must be nonempty");
  if (context && context->empty()) {
    throw ValidationError("feedback requested but no context documents were given");
  }
  std::string prefix;
  std::string suffix;
  if (context) {
    auto p = context_prefix(*context);
    if (position == ContextPosition::prepend) {
      prefix = std::move(p);
    } else {
      // Same literal, moved after the query without its trailing space.
      suffix = " " + p.substr(0, p.size() - 1);
    }
  }
  const std::string body = style == PromptStyle::natural_language
                               ? prefix + std::string(query) + suffix
                               : prefix + std::string(instruction) + ": " + std::string(query) + suffix;
  switch (style) {
    case PromptStyle::keyword_plain:
      return body;
    case PromptStyle::keyword_chat:
      return std::string(k_keyword_chat_preamble) + "\n" + body;
    case PromptStyle::natural_language:
      return std::string(k_natural_language_preamble) + "\n" + body;
  }
  return body;
}

KeywordMode parse_keyword_mode(std::string_view name) {
  if (name == "comma") return KeywordMode::comma;
  if (name == "whitespace") return KeywordMode::whitespace;
  throw ValidationError("unknown keyword mode '" + std::string(name) +
                        "' (expected comma or whitespace)");
}

std::string_view to_string(KeywordMode mode) {
  return mode == KeywordMode::comma ? "comma" : "whitespace";
}

std::vector<std::string> parse_keywords(std::string_view raw, KeywordMode mode) {
  std::vector<std::string_view> pieces;
  std::size_t start = 0;
  auto is_delim = [mode](unsigned char c) {
    return mode == KeywordMode::comma ? (c == ',' || c == '\n' || c == '\r') : text::is_space(c);
  };
  for (std::size_t i = 0; i <= raw.size(); ++i) {
    if (i == raw.size() || is_delim(static_cast<unsigned char>(raw[i]))) {
      if (i > start) pieces.push_back(raw.substr(start, i - start));
      start = i + 1;
    }
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto piece : pieces) {
    std::string_view t = piece;
    for (;;) {
      auto next = trim_punct(strip_numbering(text::trim(t)));
      if (next == t) break;
      t = next;
    }
    auto keyword = text::to_lower_ascii(text::collapse_whitespace(t));
    if (keyword.empty()) continue;
    if (seen.insert(keyword).second) out.push_back(std::move(keyword));
  }
  return out;
}

std::string filter_template() {
  auto content = find_bundled_resource("filter_template_v1.txt");
  if (!content) throw Error("bundled filter template missing");
  std::string out;
  for (auto line : text::split_lines(*content)) {
    if (text::starts_with(line, "#")) continue;
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

std::string build_filter_prompt(std::string_view query, const std::vector<std::string>& keywords) {
  if (keywords.empty()) throw ValidationError("keyword filter needs a nonempty keyword list");
  auto prompt = replace_all(filter_template(), "{query}", query);
  return replace_all(std::move(prompt), "{keywords}", text::join(keywords, ", "));
}

std::vector<std::string> apply_filter(std::string_view query,
                                      const std::vector<std::string>& keywords,
                                      Generator& generator) {
  return parse_keywords(complete(generator, build_filter_prompt(query, keywords)),
                        KeywordMode::comma);
}

std::string build_interpretability_prompt(std::string_view original_query,
                                          std::string_view reformulation_a,
                                          std::string_view reformulation_b) {
  if (text::trim(reformulation_a).empty() || text::trim(reformulation_b).empty()) {
    throw ValidationError("both reformulations must be nonempty");
  }
  auto prompt = replace_all(std::string(k_interpretability_template), "{query}", original_query);
  prompt = replace_all(std::move(prompt), "{a}", reformulation_a);
  return replace_all(std::move(prompt), "{b}", reformulation_b);
}

Verdict parse_verdict(std::string_view input) {
  auto t = text::trim(input);
  if (t.empty()) return Verdict::undecided;
  std::size_t end = t.size();
  std::size_t begin = end;
  while (begin > 0 && !text::is_space(static_cast<unsigned char>(t[begin - 1]))) --begin;
  return verdict_token(t.substr(begin, end - begin));
}

PairJudgement judge_pair_both_orders(std::string_view original_query,
                                     std::string_view reformulation_a,
                                     std::string_view reformulation_b, Generator& judge) {
  PairJudgement j;
  j.forward_prompt = build_interpretability_prompt(original_query, reformulation_a, reformulation_b);
  j.reversed_prompt = build_interpretability_prompt(original_query, reformulation_b, reformulation_a);
  j.forward = parse_verdict(judge.complete(j.forward_prompt));
  j.reversed = parse_verdict(judge.complete(j.reversed_prompt));
  auto winner = [](Verdict v, bool swapped) -> std::optional<PairOutcome> {
    if (v == Verdict::undecided) return std::nullopt;
    const bool first_slot = v == Verdict::a;
    return (first_slot != swapped) ? PairOutcome::a_preferred : PairOutcome::b_preferred;
  };
  auto w1 = winner(j.forward, false);
  auto w2 = winner(j.reversed, true);
  j.outcome = (w1 && w2 && *w1 == *w2) ? *w1 : PairOutcome::position_inconsistent;
  return j;
}

std::string_view to_string(PairOutcome outcome) {
  switch (outcome) {
    case PairOutcome::a_preferred: return "A";
    case PairOutcome::b_preferred: return "B";
    case PairOutcome::position_inconsistent: return "position-inconsistent";
  }
  return "position-inconsistent";
}

std::string to_json_line(const ReformulationRecord& r) {
  nlohmann::ordered_json j;
  j["qid"] = r.qid;
  j["instruction_index"] = r.instruction_index;
  j["prompt"] = r.prompt;
  j["raw_generation"] = r.raw_generation;
  j["keywords"] = r.keywords;
  if (r.filtered) j["filtered"] = *r.filtered;
  if (r.filter_raw) j["filter_raw"] = *r.filter_raw;
  return j.dump();
}

}  // namespace qrkit
