#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace qrkit {

struct RankedDoc {
  std::string doc_id;
  int rank = 0;  // 1-based
  double score = 0.0;

  bool operator==(const RankedDoc&) const = default;
};

/// Ordered result list for one query. Ranks run 1..n, scores are
/// nonincreasing and equal scores are ordered by ascending doc_id.
struct Ranking {
  std::string qid;
  std::vector<RankedDoc> entries;
  std::string run_tag;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  bool operator==(const Ranking&) const = default;
};

/// Sorts (doc_id, score) pairs by descending score then ascending doc_id,
/// keeps the first `k` (0 keeps all) and assigns ranks.
Ranking make_ranking(std::string qid, std::vector<std::pair<std::string, double>> scored,
                     std::size_t k, std::string run_tag);

// Throws ValidationError if ranks are not 1..n or a doc_id repeats.
void validate_ranking(const Ranking& ranking);

}  // namespace qrkit
