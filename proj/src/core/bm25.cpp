#include "bm25.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace qrkit {
namespace {

void check_weights(const WeightedQuery& query) {
  for (const auto& t : query.terms) {
    if (!(t.weight >= 0.0)) {
      throw ValidationError("query '" + query.qid + "' has negative weight for term '" + t.term +
                            "'");
    }
  }
}

std::uint32_t term_freq(const std::vector<Posting>& list, std::uint32_t doc) {
  auto it = std::lower_bound(list.begin(), list.end(), doc,
                             [](const Posting& p, std::uint32_t d) { return p.doc < d; });
  return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

}  // namespace

void WeightedQuery::append_tokens(const std::vector<std::string>& tokens, double weight) {
  for (const auto& t : tokens) terms.push_back({t, weight});
}

void WeightedQuery::append_text(std::string_view text, const Tokenizer& tokenizer, double weight) {
  append_tokens(tokenizer.tokenize(text), weight);
}

WeightedQuery WeightedQuery::from_text(std::string qid, std::string_view text,
                                       const Tokenizer& tokenizer) {
  WeightedQuery q{std::move(qid), {}};
  q.append_text(text, tokenizer, 1.0);
  return q;
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq, IdfVariant variant) {
  const double n = static_cast<double>(doc_count);
  const double df = static_cast<double>(doc_freq);
  const double ratio = (n - df + 0.5) / (df + 0.5);
  return variant == IdfVariant::lucene ? std::log(1.0 + ratio) : std::log(ratio);
}

double bm25_score(const InvertedIndex& index, const WeightedQuery& query, std::string_view doc_id,
                  const Bm25Params& params) {
  auto pos = index.find(doc_id);
  if (!pos) throw ValidationError("unknown doc_id '" + std::string(doc_id) + "'");
  check_weights(query);
  const auto& doc = index.document(*pos);
  double score = 0.0;
  for (const auto& qt : query.terms) {
    if (qt.weight == 0.0) continue;
    const auto& list = index.postings(qt.term);
    auto tf = term_freq(list, *pos);
    if (tf == 0) continue;
    const double idf = bm25_idf(index.doc_count(), list.size(), params.idf);
    score += qt.weight * idf *
             bm25_tf_part(params, tf, static_cast<double>(doc.length_tokens), index.avg_doc_len());
  }
  return score;
}

Ranking search(const InvertedIndex& index, const WeightedQuery& query, std::size_t k,
               const Bm25Params& params, std::string run_tag) {
  if (k == 0) throw ValidationError("search cutoff k must be >= 1");
  check_weights(query);
  std::vector<double> acc(index.doc_count(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<char> seen(index.doc_count(), 0);
  for (const auto& qt : query.terms) {
    if (qt.weight == 0.0) continue;
    const auto& list = index.postings(qt.term);
    if (list.empty()) continue;
    const double idf = bm25_idf(index.doc_count(), list.size(), params.idf);
    for (const auto& p : list) {
      const double len = static_cast<double>(index.document(p.doc).length_tokens);
      acc[p.doc] += qt.weight * idf * bm25_tf_part(params, p.tf, len, index.avg_doc_len());
      if (!seen[p.doc]) {
        seen[p.doc] = 1;
        touched.push_back(p.doc);
      }
    }
  }
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(touched.size());
  for (auto doc : touched) {
    if (acc[doc] > 0.0) scored.emplace_back(index.document(doc).doc_id, acc[doc]);
  }
  return make_ranking(query.qid, std::move(scored), k, std::move(run_tag));
}

}  // namespace qrkit
