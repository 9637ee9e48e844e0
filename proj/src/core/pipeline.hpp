#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bm25.hpp"
#include "fusion.hpp"
#include "generation.hpp"
#include "index.hpp"
#include "prompts.hpp"
#include "trec_io.hpp"

namespace qrkit {

enum class Method {
  raw,       // BM25 over the original query
  ensemble,  // all instructions' keywords in one weighted query
  fusion,    // one query per instruction, rankings fused
};

enum class FeedbackMode { none, prf, oracle };

struct PipelineConfig {
  Method method = Method::ensemble;
  std::size_t n_instructions = 10;
  // Original tokens weigh 1, generated tokens weigh beta.
  double beta = 1.0;
  FeedbackMode feedback = FeedbackMode::none;
  std::size_t feedback_depth = 5;
  FusionMethod fusion_method = FusionMethod::rrf;
  double k_rrf = 60.0;
  MissingRank rrf_missing = MissingRank::ignore;
  bool filter = false;
  KeywordMode keyword_mode = KeywordMode::comma;
  PromptStyle style = PromptStyle::keyword_plain;
  ContextPosition context_position = ContextPosition::prepend;
  std::size_t k = 1000;
  // Collapse keyword tokens repeated across instructions into one entry.
  bool dedup_keywords = false;
  // Search with the raw query when every generation parses to nothing.
  bool fallback_raw = false;
  Bm25Params bm25;
  std::string run_tag = "qrkit";
  unsigned parallelism = 1;

  void validate() const;
};

struct PipelineResources {
  const InvertedIndex* index = nullptr;
  const InstructionSet* instructions = nullptr;
  Generator* generator = nullptr;
  const Qrels* qrels = nullptr;  // required for oracle feedback
};

/// prf: the first m documents of a raw-query search. oracle: the m judged
/// documents with the highest grade (>= 1), ties by ascending doc_id.
std::vector<Document> select_feedback(const Topic& query, const PipelineResources& resources,
                                      const PipelineConfig& config);

/// Per-instruction keyword generation (with feedback context when given).
/// Records are appended to `records` in instruction order.
std::vector<std::vector<std::string>> generate_keywords(
    const Topic& query, const PipelineResources& resources, const PipelineConfig& config,
    const std::vector<Document>* context, std::vector<ReformulationRecord>& records);

/// Original tokens at weight 1 followed by every instruction's keyword tokens
/// at weight beta, in instruction order.
WeightedQuery gen_qr_ensemble(const Topic& query, const PipelineResources& resources,
                              const PipelineConfig& config,
                              std::vector<ReformulationRecord>* records = nullptr,
                              const std::vector<Document>* context = nullptr);

/// One search per instruction, fused with config.fusion_method. When only one
/// instruction yields a nonempty ranking it is returned unchanged.
Ranking gen_qr_fusion(const Topic& query, const PipelineResources& resources,
                      const PipelineConfig& config,
                      std::vector<ReformulationRecord>* records = nullptr,
                      const std::vector<Document>* context = nullptr);

/// Single-instruction reformulation with the base (first) instruction, searched
/// directly. Kept separate from the ensemble path as a reference baseline.
Ranking gen_qr_single(const Topic& query, const PipelineResources& resources,
                      const PipelineConfig& config);

struct MethodResult {
  Ranking ranking;
  std::vector<ReformulationRecord> records;
  std::optional<WeightedQuery> query;  // set for raw and ensemble
  std::vector<std::string> feedback_doc_ids;
};

MethodResult run_method(const Topic& query, const PipelineResources& resources,
                        const PipelineConfig& config);

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
FeedbackMode parse_feedback_mode(std::string_view name);
std::string_view to_string(FeedbackMode mode);

}  // namespace qrkit
