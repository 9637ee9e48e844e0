#include "fusion.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "error.hpp"

namespace qrkit {
namespace {

void check_inputs(std::span<const Ranking> inputs) {
  if (inputs.empty()) throw ValidationError("fusion needs at least one ranking");
  for (const auto& r : inputs) {
    if (r.qid != inputs.front().qid) {
      throw ValidationError("cannot fuse rankings of different queries ('" + inputs.front().qid +
                            "' and '" + r.qid + "')");
    }
    validate_ranking(r);
  }
}

// Contributions are summed in ascending order so the result does not depend on
// the order of the input lists.
double ordered_sum(std::vector<double>& parts) {
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  for (double p : parts) total += p;
  return total;
}

Ranking finish(std::span<const Ranking> inputs, std::map<std::string, double> scores,
               const FusionOptions& options) {
  std::vector<std::pair<std::string, double>> scored(scores.begin(), scores.end());
  std::string tag = options.run_tag.empty() ? inputs.front().run_tag : options.run_tag;
  return make_ranking(inputs.front().qid, std::move(scored), options.cutoff, std::move(tag));
}

}  // namespace

Ranking rrf(std::span<const Ranking> inputs, const FusionOptions& options) {
  check_inputs(inputs);
  if (!(options.k_rrf > 0.0)) throw ValidationError("k_rrf must be positive");
  std::map<std::string, std::vector<double>> parts;
  for (const auto& r : inputs) {
    for (const auto& e : r.entries) parts[e.doc_id].push_back(1.0 / (options.k_rrf + e.rank));
  }
  if (options.missing == MissingRank::impute) {
    for (const auto& r : inputs) {
      std::unordered_map<std::string_view, bool> present;
      for (const auto& e : r.entries) present[e.doc_id] = true;
      const double imputed = 1.0 / (options.k_rrf + static_cast<double>(r.entries.size() + 1));
      for (auto& [doc, list] : parts) {
        if (!present.count(doc)) list.push_back(imputed);
      }
    }
  }
  std::map<std::string, double> scores;
  for (auto& [doc, list] : parts) scores.emplace(doc, ordered_sum(list));
  return finish(inputs, std::move(scores), options);
}

Ranking score_fuse(std::span<const Ranking> inputs, FusionMethod aggregate,
                   const FusionOptions& options) {
  check_inputs(inputs);
  if (aggregate == FusionMethod::rrf) throw ValidationError("score_fuse needs sum or max");
  std::map<std::string, std::vector<double>> parts;
  for (const auto& r : inputs) {
    for (const auto& e : r.entries) parts[e.doc_id].push_back(e.score);
  }
  std::map<std::string, double> scores;
  for (auto& [doc, list] : parts) {
    scores.emplace(doc, aggregate == FusionMethod::score_sum
                            ? ordered_sum(list)
                            : *std::max_element(list.begin(), list.end()));
  }
  return finish(inputs, std::move(scores), options);
}

Ranking fuse(std::span<const Ranking> inputs, FusionMethod method, const FusionOptions& options) {
  return method == FusionMethod::rrf ? rrf(inputs, options) : score_fuse(inputs, method, options);
}

RunFile fuse_runs(const std::vector<RunFile>& runs, FusionMethod method,
                  const FusionOptions& options) {
  if (runs.empty()) throw ValidationError("fusion needs at least one run");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Ranking>> grouped;
  for (const auto& run : runs) {
    for (const auto& ranking : run) {
      auto& list = grouped[ranking.qid];
      if (list.empty()) order.push_back(ranking.qid);
      list.push_back(ranking);
    }
  }
  RunFile out;
  for (const auto& qid : order) {
    auto fused = fuse(grouped[qid], method, options);
    if (!fused.empty()) out.push_back(std::move(fused));
  }
  return out;
}

FusionMethod parse_fusion_method(std::string_view name) {
  if (name == "rrf") return FusionMethod::rrf;
  if (name == "score_sum" || name == "sum") return FusionMethod::score_sum;
  if (name == "score_max" || name == "max") return FusionMethod::score_max;
  throw ValidationError("unknown fusion method '" + std::string(name) +
                        "' (expected rrf, score_sum or score_max)");
}

std::string_view to_string(FusionMethod method) {
  switch (method) {
    case FusionMethod::rrf: return "rrf";
    case FusionMethod::score_sum: return "score_sum";
    case FusionMethod::score_max: return "score_max";
  }
  return "rrf";
}

}  // namespace qrkit
