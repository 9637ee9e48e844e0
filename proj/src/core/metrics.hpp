#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ranking.hpp"
#include "trec_io.hpp"

namespace qrkit {

enum class Gain { linear, exponential };

// Per-query measures. std::nullopt marks a query for which the measure is
// undefined (no judged document reaches the relevance threshold); such
// queries are left out of means.

std::optional<double> ndcg_at_k(const Ranking& ranking, const Qrels& qrels, int k,
                                Gain gain = Gain::linear);
/// Denominator is k even when fewer than k documents were retrieved.
double precision_at_k(const Ranking& ranking, const Qrels& qrels, int k, int threshold = 1);
std::optional<double> recall_at_k(const Ranking& ranking, const Qrels& qrels, int k,
                                  int threshold = 1);
std::optional<double> average_precision(const Ranking& ranking, const Qrels& qrels,
                                        int threshold = 1);
/// 1 / rank of the first document with grade >= threshold, 0 if none retrieved.
double reciprocal_rank(const Ranking& ranking, const Qrels& qrels, int threshold = 1);

enum class MeasureKind { ndcg, precision, recall, average_precision, reciprocal_rank };

/// A measure with its cutoff and threshold. Textual forms:
///   ndcg@10, ndcg_exp@10, p@10, recall@10, map, rr, with an optional
///   relevance threshold suffix "(rel=2)", e.g. "rr(rel=2)" or "p@10(rel=2)".
struct Measure {
  MeasureKind kind = MeasureKind::ndcg;
  int k = 0;
  int threshold = 1;
  Gain gain = Gain::linear;

  std::string name() const;
  /// Table heading, e.g. "nDCG@10", "P@10", "MAP", "MRR(rel=2)".
  std::string label() const;
  bool operator==(const Measure&) const = default;
};

Measure parse_measure(std::string_view text);
std::vector<Measure> parse_measure_list(std::string_view comma_separated);

std::optional<double> evaluate_measure(const Measure& measure, const Ranking& ranking,
                                       const Qrels& qrels);

struct QueryMeasures {
  std::string qid;
  std::vector<std::optional<double>> values;  // parallel to MeasureReport::measures
};

struct MeasureReport {
  std::vector<Measure> measures;
  std::vector<QueryMeasures> per_query;  // sorted by qid
  std::vector<double> aggregate;         // mean over defined values
  std::vector<std::size_t> evaluated;    // number of defined values per measure

  /// Values of measure `m` for the given qids (undefined entries are skipped).
  std::vector<std::pair<std::string, double>> column(std::size_t m) const;
};

/// Evaluates every judged query of `qrels`; a query absent from the run
/// counts as an empty ranking. Queries only present in the run are ignored.
MeasureReport evaluate_run(const RunFile& run, const Qrels& qrels,
                           const std::vector<Measure>& measures);

}  // namespace qrkit
