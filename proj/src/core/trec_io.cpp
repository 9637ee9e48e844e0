#include "trec_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <unordered_set>

#include "diag.hpp"
#include "error.hpp"
#include "text.hpp"

namespace qrkit {
namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && text::is_space(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !text::is_space(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_int(std::string_view s, long long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return !buf.empty() && end == buf.c_str() + buf.size();
}

std::string excerpt(std::string_view line) { return std::string(line.substr(0, 120)); }

}  // namespace

void Qrels::add(std::string qid, std::string doc_id, int grade) {
  if (grade < 0) throw ValidationError("negative relevance grade for " + qid + "/" + doc_id);
  auto& docs = by_query_[qid];
  if (docs.empty()) qids_.push_back(qid);
  if (!docs.emplace(doc_id, grade).second) {
    throw ValidationError("duplicate judgment for qid '" + qid + "' doc '" + doc_id + "'");
  }
  lines_.push_back({std::move(qid), std::move(doc_id), grade});
}

std::optional<int> Qrels::grade(std::string_view qid, std::string_view doc_id) const {
  auto q = by_query_.find(std::string(qid));
  if (q == by_query_.end()) return std::nullopt;
  auto d = q->second.find(std::string(doc_id));
  if (d == q->second.end()) return std::nullopt;
  return d->second;
}

const std::unordered_map<std::string, int>& Qrels::for_query(std::string_view qid) const {
  static const std::unordered_map<std::string, int> empty;
  auto q = by_query_.find(std::string(qid));
  return q == by_query_.end() ? empty : q->second;
}

Qrels parse_qrels(std::string_view content, const std::string& source) {
  Qrels qrels;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto f = fields(line);
    long long grade = 0;
    if (f.size() != 4 || !parse_int(f[3], grade)) {
      throw ParseError(source, line_no, excerpt(line), "expected 'qid iteration docid grade'");
    }
    if (grade < 0) {
      diag::warn(source + ":" + std::to_string(line_no) + ": grade " + std::to_string(grade) +
                 " clamped to 0");
      grade = 0;
    }
    try {
      qrels.add(std::string(f[0]), std::string(f[2]), static_cast<int>(grade));
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, excerpt(line), e.what());
    }
  }
  return qrels;
}

std::string format_qrels(const Qrels& qrels) {
  std::string out;
  for (const auto& j : qrels.judgments()) {
    out += j.qid;
    out += " 0 ";
    out += j.doc_id;
    out += ' ';
    out += std::to_string(j.grade);
    out += '\n';
  }
  return out;
}

Qrels read_qrels(const std::string& path) { return parse_qrels(text::read_file(path), path); }

void write_qrels(const std::string& path, const Qrels& qrels) {
  text::write_file_atomic(path, format_qrels(qrels));
}

RunFile parse_run(std::string_view content, const std::string& source) {
  RunFile run;
  std::unordered_map<std::string, std::size_t> slot;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen_docs;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto f = fields(line);
    long long rank = 0;
    double score = 0.0;
    if (f.size() != 6) {
      throw ParseError(source, line_no, excerpt(line), "expected 'qid Q0 docid rank score tag'");
    }
    if (!parse_int(f[3], rank)) throw ParseError(source, line_no, excerpt(line), "bad rank");
    if (!parse_double(f[4], score)) throw ParseError(source, line_no, excerpt(line), "bad score");
    std::string qid(f[0]);
    auto [it, inserted] = slot.emplace(qid, run.size());
    if (inserted) run.push_back(Ranking{qid, {}, std::string(f[5])});
    auto& ranking = run[it->second];
    if (ranking.run_tag != f[5]) {
      throw ParseError(source, line_no, excerpt(line), "run tag differs within query");
    }
    const long long expected = static_cast<long long>(ranking.entries.size()) + 1;
    if (rank != expected) {
      throw ParseError(source, line_no, excerpt(line),
                       "rank " + std::to_string(rank) + " where " + std::to_string(expected) +
                           " was expected");
    }
    if (!seen_docs[qid].insert(std::string(f[2])).second) {
      throw ParseError(source, line_no, excerpt(line), "duplicate docid within query");
    }
    ranking.entries.push_back({std::string(f[2]), static_cast<int>(rank), score});
  }
  return run;
}

std::string format_ranking(const Ranking& ranking) {
  std::string out;
  char score[64];
  for (const auto& e : ranking.entries) {
    std::snprintf(score, sizeof(score), "%.6f", e.score);
    out += ranking.qid;
    out += " Q0 ";
    out += e.doc_id;
    out += ' ';
    out += std::to_string(e.rank);
    out += ' ';
    out += score;
    out += ' ';
    out += ranking.run_tag;
    out += '\n';
  }
  return out;
}

std::string format_run(const RunFile& run) {
  std::string out;
  for (const auto& r : run) out += format_ranking(r);
  return out;
}

RunFile read_run(const std::string& path) { return parse_run(text::read_file(path), path); }

void write_run(const std::string& path, const RunFile& run) {
  text::write_file_atomic(path, format_run(run));
}

std::vector<Topic> parse_topics(std::string_view content, const std::string& source) {
  std::vector<Topic> topics;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError(source, line_no, excerpt(line), "expected 'qid<TAB>title'");
    }
    Topic t{std::string(line.substr(0, tab)), std::string(text::trim(line.substr(tab + 1)))};
    if (t.title.empty()) throw ParseError(source, line_no, excerpt(line), "empty title");
    if (!seen.insert(t.qid).second) {
      throw ParseError(source, line_no, excerpt(line), "duplicate qid");
    }
    topics.push_back(std::move(t));
  }
  return topics;
}

std::string format_topics(const std::vector<Topic>& topics) {
  std::string out;
  for (const auto& t : topics) out += t.qid + "\t" + t.title + "\n";
  return out;
}

std::vector<Topic> read_topics(const std::string& path) {
  return parse_topics(text::read_file(path), path);
}

}  // namespace qrkit
