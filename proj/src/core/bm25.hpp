#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "index.hpp"
#include "ranking.hpp"

namespace qrkit {

enum class IdfVariant {
  lucene,     // ln(1 + (N - df + 0.5) / (df + 0.5)), never negative
  robertson,  // ln((N - df + 0.5) / (df + 0.5)), negative for very common terms
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  IdfVariant idf = IdfVariant::lucene;
};

struct QueryTerm {
  std::string term;
  double weight = 1.0;

  bool operator==(const QueryTerm&) const = default;
};

/// Bag of weighted terms. Repeated terms are kept as separate entries and
/// their contributions add up.
struct WeightedQuery {
  std::string qid;
  std::vector<QueryTerm> terms;

  /// Tokenizes `text` and appends every token with `weight`.
  void append_text(std::string_view text, const Tokenizer& tokenizer, double weight);
  void append_tokens(const std::vector<std::string>& tokens, double weight);

  static WeightedQuery from_text(std::string qid, std::string_view text,
                                 const Tokenizer& tokenizer);

  bool operator==(const WeightedQuery&) const = default;
};

double bm25_idf(std::size_t doc_count, std::size_t doc_freq, IdfVariant variant);

/// Contribution of one (term, document) pair with unit weight.
inline double bm25_tf_part(const Bm25Params& p, double tf, double doc_len, double avg_len) {
  const double norm = avg_len > 0.0 ? doc_len / avg_len : 0.0;
  return (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

/// Throws ValidationError for an unknown doc_id or a negative weight.
double bm25_score(const InvertedIndex& index, const WeightedQuery& query,
                  std::string_view doc_id, const Bm25Params& params = {});

/// Top-k documents by BM25 with scores > 0, ties by ascending doc_id.
Ranking search(const InvertedIndex& index, const WeightedQuery& query, std::size_t k,
               const Bm25Params& params = {}, std::string run_tag = "qrkit");

}  // namespace qrkit
