#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ranking.hpp"

namespace qrkit {

struct Judgment {
  std::string qid;
  std::string doc_id;
  int grade = 0;

  bool operator==(const Judgment&) const = default;
};

/// Graded relevance judgments, one grade per (qid, doc_id). Line order of the
/// source file is kept so that writing reproduces it.
class Qrels {
 public:
  /// Throws ValidationError on a negative grade or a repeated (qid, doc_id).
  void add(std::string qid, std::string doc_id, int grade);

  std::optional<int> grade(std::string_view qid, std::string_view doc_id) const;
  int grade_or_zero(std::string_view qid, std::string_view doc_id) const {
    return grade(qid, doc_id).value_or(0);
  }

  /// doc_id -> grade for one query; empty when the query has no judgments.
  const std::unordered_map<std::string, int>& for_query(std::string_view qid) const;
  /// Query ids in order of first appearance.
  const std::vector<std::string>& qids() const noexcept { return qids_; }
  const std::vector<Judgment>& judgments() const noexcept { return lines_; }

  bool operator==(const Qrels& other) const { return lines_ == other.lines_; }

 private:
  std::vector<Judgment> lines_;
  std::vector<std::string> qids_;
  std::unordered_map<std::string, std::unordered_map<std::string, int>> by_query_;
};

using RunFile = std::vector<Ranking>;

struct Topic {
  std::string qid;
  std::string title;

  bool operator==(const Topic&) const = default;
};

// Qrels lines: "qid iteration docid grade". Grades below zero are clamped to
// 0 with a warning.
Qrels parse_qrels(std::string_view content, const std::string& source = "<qrels>");
std::string format_qrels(const Qrels& qrels);
Qrels read_qrels(const std::string& path);
void write_qrels(const std::string& path, const Qrels& qrels);

// Run lines: "qid Q0 docid rank score tag", score printed with 6 decimals.
// Ranks of each query must be consecutive from 1 in file order.
RunFile parse_run(std::string_view content, const std::string& source = "<run>");
std::string format_run(const RunFile& run);
std::string format_ranking(const Ranking& ranking);
RunFile read_run(const std::string& path);
void write_run(const std::string& path, const RunFile& run);

// Topics lines: "qid<TAB>title".
std::vector<Topic> parse_topics(std::string_view content, const std::string& source = "<topics>");
std::string format_topics(const std::vector<Topic>& topics);
std::vector<Topic> read_topics(const std::string& path);

}  // namespace qrkit
