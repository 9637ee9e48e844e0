#include "ranking.hpp"

#include <algorithm>
#include <unordered_set>

#include "error.hpp"

namespace qrkit {

Ranking make_ranking(std::string qid, std::vector<std::pair<std::string, double>> scored,
                     std::size_t k, std::string run_tag) {
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (k != 0 && k < scored.size()) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  Ranking ranking{std::move(qid), {}, std::move(run_tag)};
  ranking.entries.reserve(scored.size());
  int rank = 1;
  for (auto& [doc, score] : scored) {
    ranking.entries.push_back({std::move(doc), rank++, score});
  }
  return ranking;
}

void validate_ranking(const Ranking& ranking) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    if (e.rank != static_cast<int>(i + 1)) {
      throw ValidationError("ranking for qid '" + ranking.qid + "' has rank " +
                            std::to_string(e.rank) + " at position " + std::to_string(i + 1));
    }
    if (!seen.insert(e.doc_id).second) {
      throw ValidationError("ranking for qid '" + ranking.qid + "' repeats doc_id '" + e.doc_id +
                            "'");
    }
  }
}

}  // namespace qrkit
