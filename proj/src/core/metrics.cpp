#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "error.hpp"
#include "text.hpp"

namespace qrkit {
namespace {

double gain_of(int grade, Gain gain) {
  if (grade <= 0) return 0.0;
  return gain == Gain::linear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
}

std::size_t relevant_count(const Qrels& qrels, std::string_view qid, int threshold) {
  std::size_t n = 0;
  for (const auto& [doc, grade] : qrels.for_query(qid)) n += grade >= threshold;
  return n;
}

std::size_t hits_in_prefix(const Ranking& ranking, const Qrels& qrels, int k, int threshold) {
  std::size_t hits = 0;
  const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
  for (std::size_t i = 0; i < depth; ++i) {
    hits += qrels.grade_or_zero(ranking.qid, ranking.entries[i].doc_id) >= threshold;
  }
  return hits;
}

void require_positive(int value, const char* what) {
  if (value < 1) throw ValidationError(std::string(what) + " must be >= 1");
}

}  // namespace

std::optional<double> ndcg_at_k(const Ranking& ranking, const Qrels& qrels, int k, Gain gain) {
  require_positive(k, "nDCG cutoff");
  std::vector<int> grades;
  for (const auto& [doc, grade] : qrels.for_query(ranking.qid)) grades.push_back(grade);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t i = 0; i < grades.size() && i < static_cast<std::size_t>(k); ++i) {
    ideal += gain_of(grades[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (ideal <= 0.0) return std::nullopt;
  double dcg = 0.0;
  const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
  for (std::size_t i = 0; i < depth; ++i) {
    int grade = qrels.grade_or_zero(ranking.qid, ranking.entries[i].doc_id);
    dcg += gain_of(grade, gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

double precision_at_k(const Ranking& ranking, const Qrels& qrels, int k, int threshold) {
  require_positive(k, "precision cutoff");
  require_positive(threshold, "relevance threshold");
  return static_cast<double>(hits_in_prefix(ranking, qrels, k, threshold)) / k;
}

std::optional<double> recall_at_k(const Ranking& ranking, const Qrels& qrels, int k,
                                  int threshold) {
  require_positive(k, "recall cutoff");
  require_positive(threshold, "relevance threshold");
  auto total = relevant_count(qrels, ranking.qid, threshold);
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits_in_prefix(ranking, qrels, k, threshold)) /
         static_cast<double>(total);
}

std::optional<double> average_precision(const Ranking& ranking, const Qrels& qrels,
                                        int threshold) {
  require_positive(threshold, "relevance threshold");
  auto total = relevant_count(qrels, ranking.qid, threshold);
  if (total == 0) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (qrels.grade_or_zero(ranking.qid, ranking.entries[i].doc_id) >= threshold) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total);
}

double reciprocal_rank(const Ranking& ranking, const Qrels& qrels, int threshold) {
  require_positive(threshold, "relevance threshold");
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (qrels.grade_or_zero(ranking.qid, ranking.entries[i].doc_id) >= threshold) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return 0.0;
}

std::string Measure::name() const {
  std::string base;
  switch (kind) {
    case MeasureKind::ndcg:
      base = (gain == Gain::exponential ? "ndcg_exp@" : "ndcg@") + std::to_string(k);
      break;
    case MeasureKind::precision: base = "p@" + std::to_string(k); break;
    case MeasureKind::recall: base = "recall@" + std::to_string(k); break;
    case MeasureKind::average_precision: base = "map"; break;
    case MeasureKind::reciprocal_rank: base = "rr"; break;
  }
  if (threshold != 1 && kind != MeasureKind::ndcg) {
    base += "(rel=" + std::to_string(threshold) + ")";
  }
  return base;
}

std::string Measure::label() const {
  std::string base;
  switch (kind) {
    case MeasureKind::ndcg:
      base = (gain == Gain::exponential ? "nDCGexp@" : "nDCG@") + std::to_string(k);
      break;
    case MeasureKind::precision: base = "P@" + std::to_string(k); break;
    case MeasureKind::recall: base = "R@" + std::to_string(k); break;
    case MeasureKind::average_precision: base = "MAP"; break;
    case MeasureKind::reciprocal_rank: base = "MRR"; break;
  }
  if (threshold != 1 && kind != MeasureKind::ndcg) {
    base += "(rel=" + std::to_string(threshold) + ")";
  }
  return base;
}

Measure parse_measure(std::string_view input) {
  const std::string original(input);
  std::string s = text::to_lower_ascii(text::trim(input));
  Measure m;
  auto open = s.find('(');
  if (open != std::string::npos) {
    auto suffix = s.substr(open);
    const std::string prefix = "(rel=";
    if (suffix.size() <= prefix.size() + 1 || suffix.compare(0, prefix.size(), prefix) != 0 ||
        suffix.back() != ')') {
      throw ValidationError("bad relevance threshold in measure '" + original + "'");
    }
    auto digits = suffix.substr(prefix.size(), suffix.size() - prefix.size() - 1);
    try {
      std::size_t used = 0;
      m.threshold = std::stoi(digits, &used);
      if (used != digits.size()) throw std::invalid_argument(digits);
    } catch (const std::exception&) {
      throw ValidationError("bad relevance threshold in measure '" + original + "'");
    }
    if (m.threshold < 1) throw ValidationError("relevance threshold must be >= 1 in '" + original + "'");
    s = s.substr(0, open);
  }
  std::string base = s;
  auto at = s.find('@');
  if (at != std::string::npos) {
    base = s.substr(0, at);
    auto digits = s.substr(at + 1);
    try {
      std::size_t used = 0;
      m.k = std::stoi(digits, &used);
      if (used != digits.size()) throw std::invalid_argument(digits);
    } catch (const std::exception&) {
      throw ValidationError("bad cutoff in measure '" + original + "'");
    }
    if (m.k < 1) throw ValidationError("cutoff must be >= 1 in measure '" + original + "'");
  }
  const bool has_k = at != std::string::npos;
  if (base == "ndcg" || base == "ndcg_exp") {
    m.kind = MeasureKind::ndcg;
    m.gain = base == "ndcg" ? Gain::linear : Gain::exponential;
    if (m.threshold != 1) throw ValidationError("nDCG takes no relevance threshold: '" + original + "'");
  } else if (base == "p") {
    m.kind = MeasureKind::precision;
  } else if (base == "recall" || base == "r") {
    m.kind = MeasureKind::recall;
  } else if (base == "map" || base == "ap") {
    m.kind = MeasureKind::average_precision;
  } else if (base == "rr" || base == "mrr") {
    m.kind = MeasureKind::reciprocal_rank;
  } else {
    throw ValidationError("unknown measure '" + original + "'");
  }
  const bool needs_k = m.kind == MeasureKind::ndcg || m.kind == MeasureKind::precision ||
                       m.kind == MeasureKind::recall;
  if (needs_k != has_k) {
    throw ValidationError(needs_k ? "measure '" + original + "' needs a cutoff, e.g. @10"
                                  : "measure '" + original + "' takes no cutoff");
  }
  return m;
}

std::vector<Measure> parse_measure_list(std::string_view comma_separated) {
  std::vector<Measure> out;
  // Commas inside "(rel=2)" never occur, so a plain split is enough.
  for (const auto& part : text::split(comma_separated, ',')) {
    if (text::trim(part).empty()) continue;
    out.push_back(parse_measure(part));
  }
  if (out.empty()) throw ValidationError("empty measure list");
  return out;
}

std::optional<double> evaluate_measure(const Measure& m, const Ranking& ranking,
                                       const Qrels& qrels) {
  switch (m.kind) {
    case MeasureKind::ndcg:
      return ndcg_at_k(ranking, qrels, m.k, m.gain);
    case MeasureKind::recall:
      return recall_at_k(ranking, qrels, m.k, m.threshold);
    case MeasureKind::average_precision:
      return average_precision(ranking, qrels, m.threshold);
    case MeasureKind::precision:
      if (relevant_count(qrels, ranking.qid, m.threshold) == 0) return std::nullopt;
      return precision_at_k(ranking, qrels, m.k, m.threshold);
    case MeasureKind::reciprocal_rank:
      if (relevant_count(qrels, ranking.qid, m.threshold) == 0) return std::nullopt;
      return reciprocal_rank(ranking, qrels, m.threshold);
  }
  return std::nullopt;
}

std::vector<std::pair<std::string, double>> MeasureReport::column(std::size_t m) const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& row : per_query) {
    if (row.values.at(m)) out.emplace_back(row.qid, *row.values[m]);
  }
  return out;
}

MeasureReport evaluate_run(const RunFile& run, const Qrels& qrels,
                           const std::vector<Measure>& measures) {
  std::unordered_map<std::string_view, const Ranking*> by_qid;
  for (const auto& r : run) by_qid.emplace(r.qid, &r);
  MeasureReport report;
  report.measures = measures;
  std::vector<std::string> qids = qrels.qids();
  std::sort(qids.begin(), qids.end());
  std::vector<double> sums(measures.size(), 0.0);
  report.evaluated.assign(measures.size(), 0);
  for (const auto& qid : qids) {
    Ranking empty{qid, {}, ""};
    auto it = by_qid.find(qid);
    const Ranking& ranking = it == by_qid.end() ? empty : *it->second;
    QueryMeasures row{qid, {}};
    for (std::size_t m = 0; m < measures.size(); ++m) {
      auto v = evaluate_measure(measures[m], ranking, qrels);
      if (v) {
        sums[m] += *v;
        ++report.evaluated[m];
      }
      row.values.push_back(v);
    }
    report.per_query.push_back(std::move(row));
  }
  for (std::size_t m = 0; m < measures.size(); ++m) {
    report.aggregate.push_back(report.evaluated[m] ? sums[m] / report.evaluated[m] : 0.0);
  }
  return report;
}

}  // namespace qrkit
