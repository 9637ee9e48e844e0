#pragma once

#include <span>
#include <string>
#include <vector>

#include "ranking.hpp"
#include "trec_io.hpp"

namespace qrkit {

enum class FusionMethod { rrf, score_sum, score_max };

/// How RRF treats a document missing from one input list.
enum class MissingRank {
  ignore,  // no contribution
  impute,  // contributes as if ranked |list| + 1
};

struct FusionOptions {
  double k_rrf = 60.0;
  MissingRank missing = MissingRank::ignore;
  std::size_t cutoff = 0;  // 0 keeps the whole union
  std::string run_tag;     // empty keeps the first input's tag
};

/// fused(d) = sum over lists containing d of 1 / (k_rrf + rank_i(d)).
Ranking rrf(std::span<const Ranking> inputs, const FusionOptions& options = {});

/// fused(d) = sum or max of the scores d received in the lists containing it.
Ranking score_fuse(std::span<const Ranking> inputs, FusionMethod aggregate,
                   const FusionOptions& options = {});

Ranking fuse(std::span<const Ranking> inputs, FusionMethod method,
             const FusionOptions& options = {});

/// Fuses several run files query by query. Queries appear in order of first
/// appearance across the inputs; a query missing from some runs is fused from
/// the runs that have it.
RunFile fuse_runs(const std::vector<RunFile>& runs, FusionMethod method,
                  const FusionOptions& options = {});

FusionMethod parse_fusion_method(std::string_view name);
std::string_view to_string(FusionMethod method);

}  // namespace qrkit
