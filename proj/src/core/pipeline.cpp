#include "pipeline.hpp"

#include <algorithm>
#include <unordered_set>

#include "error.hpp"
#include "parallel.hpp"

namespace qrkit {
namespace {

void require(const PipelineResources& r, bool needs_generator) {
  if (!r.index) throw ValidationError("pipeline needs an index");
  if (needs_generator) {
    if (!r.instructions) throw ValidationError("pipeline needs an instruction set");
    if (!r.generator) throw ValidationError("pipeline needs a generator");
  }
}

WeightedQuery raw_query(const Topic& query, const InvertedIndex& index) {
  return WeightedQuery::from_text(query.qid, query.title, index.tokenizer());
}

bool all_empty(const std::vector<std::vector<std::string>>& lists) {
  return std::all_of(lists.begin(), lists.end(), [](const auto& l) { return l.empty(); });
}

GenerationError empty_reformulation(const Topic& query) {
  return GenerationError("empty reformulation for qid '" + query.qid + "'");
}

void append_keywords(WeightedQuery& q, const std::vector<std::string>& keywords,
                     const Tokenizer& tokenizer, double beta,
                     std::unordered_set<std::string>* seen) {
  for (const auto& keyword : keywords) {
    for (auto& token : tokenizer.tokenize(keyword)) {
      if (seen && !seen->insert(token).second) continue;
      q.terms.push_back({std::move(token), beta});
    }
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (method != Method::raw && n_instructions < 1) {
    throw ValidationError("n_instructions must be >= 1");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must be in [0, 1]");
  if (feedback != FeedbackMode::none && feedback_depth < 1) {
    throw ValidationError("feedback_depth must be >= 1 when feedback is enabled");
  }
  if (k < 1) throw ValidationError("retrieval cutoff k must be >= 1");
  if (!(k_rrf > 0.0)) throw ValidationError("k_rrf must be > 0");
  if (!(bm25.k1 >= 0.0)) throw ValidationError("bm25.k1 must be >= 0");
  if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) throw ValidationError("bm25.b must be in [0, 1]");
  if (run_tag.empty() || run_tag.find_first_of(" \t\n") != std::string::npos) {
    throw ValidationError("run_tag must be a nonempty token without whitespace");
  }
}

std::vector<Document> select_feedback(const Topic& query, const PipelineResources& resources,
                                      const PipelineConfig& config) {
  require(resources, false);
  const auto m = config.feedback_depth;
  if (config.feedback == FeedbackMode::none) {
    throw ValidationError("select_feedback called with feedback disabled");
  }
  if (m < 1) throw ValidationError("feedback_depth must be >= 1");
  std::vector<Document> docs;
  const auto& index = *resources.index;
  if (config.feedback == FeedbackMode::prf) {
    auto first = search(index, raw_query(query, index), m, config.bm25, config.run_tag);
    if (first.empty()) {
      throw Error("pseudo-relevance feedback: first-pass ranking for qid '" + query.qid +
                  "' is empty");
    }
    for (const auto& e : first.entries) docs.push_back(index.document(*index.find(e.doc_id)));
    return docs;
  }
  if (!resources.qrels) throw ValidationError("oracle feedback needs qrels");
  std::vector<std::pair<std::string, int>> judged;
  for (const auto& [doc, grade] : resources.qrels->for_query(query.qid)) {
    if (grade >= 1 && index.find(doc)) judged.emplace_back(doc, grade);
  }
  if (judged.empty()) {
    throw Error("oracle feedback: no relevant indexed documents for qid '" + query.qid + "'");
  }
  std::sort(judged.begin(), judged.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (judged.size() > m) judged.resize(m);
  for (const auto& [doc, _] : judged) docs.push_back(index.document(*index.find(doc)));
  return docs;
}

std::vector<std::vector<std::string>> generate_keywords(
    const Topic& query, const PipelineResources& resources, const PipelineConfig& config,
    const std::vector<Document>* context, std::vector<ReformulationRecord>& records) {
  require(resources, true);
  const auto& set = *resources.instructions;
  if (config.n_instructions < 1 || config.n_instructions > set.size()) {
    throw ValidationError("n_instructions=" + std::to_string(config.n_instructions) +
                          " but instruction set '" + set.name + "' has " +
                          std::to_string(set.size()));
  }
  std::optional<std::span<const Document>> ctx;
  if (context) ctx = std::span<const Document>(*context);

  auto produced = parallel_map(config.n_instructions, config.parallelism, [&](std::size_t i) {
    ReformulationRecord rec;
    rec.qid = query.qid;
    rec.instruction_index = static_cast<int>(i + 1);
    rec.prompt = build_qr_prompt(set.instructions[i], query.title, config.style, ctx,
                                 config.context_position);
    rec.raw_generation = complete(*resources.generator, rec.prompt);
    rec.keywords = parse_keywords(rec.raw_generation, config.keyword_mode);
    if (config.filter && !rec.keywords.empty()) {
      rec.filter_raw = complete(*resources.generator, build_filter_prompt(query.title, rec.keywords));
      rec.filtered = parse_keywords(*rec.filter_raw, KeywordMode::comma);
    }
    return rec;
  });

  std::vector<std::vector<std::string>> lists;
  for (auto& rec : produced) {
    lists.push_back(rec.filtered ? *rec.filtered : rec.keywords);
    records.push_back(std::move(rec));
  }
  return lists;
}

WeightedQuery gen_qr_ensemble(const Topic& query, const PipelineResources& resources,
                              const PipelineConfig& config,
                              std::vector<ReformulationRecord>* records,
                              const std::vector<Document>* context) {
  std::vector<ReformulationRecord> local;
  auto lists = generate_keywords(query, resources, config, context, records ? *records : local);
  const auto& index = *resources.index;
  WeightedQuery q = raw_query(query, index);
  if (all_empty(lists)) {
    if (config.fallback_raw) return q;
    throw empty_reformulation(query);
  }
  std::unordered_set<std::string> seen;
  for (const auto& list : lists) {
    append_keywords(q, list, index.tokenizer(), config.beta,
                    config.dedup_keywords ? &seen : nullptr);
  }
  return q;
}

Ranking gen_qr_fusion(const Topic& query, const PipelineResources& resources,
                      const PipelineConfig& config, std::vector<ReformulationRecord>* records,
                      const std::vector<Document>* context) {
  std::vector<ReformulationRecord> local;
  auto lists = generate_keywords(query, resources, config, context, records ? *records : local);
  const auto& index = *resources.index;
  if (all_empty(lists)) {
    if (!config.fallback_raw) throw empty_reformulation(query);
    return search(index, raw_query(query, index), config.k, config.bm25, config.run_tag);
  }
  auto rankings = parallel_map(lists.size(), config.parallelism, [&](std::size_t i) {
    WeightedQuery q = raw_query(query, index);
    std::unordered_set<std::string> seen;
    append_keywords(q, lists[i], index.tokenizer(), config.beta,
                    config.dedup_keywords ? &seen : nullptr);
    return search(index, q, config.k, config.bm25, config.run_tag);
  });
  std::vector<Ranking> nonempty;
  for (auto& r : rankings) {
    if (!r.empty()) nonempty.push_back(std::move(r));
  }
  if (nonempty.empty()) return Ranking{query.qid, {}, config.run_tag};
  if (nonempty.size() == 1) return std::move(nonempty.front());
  FusionOptions options;
  options.k_rrf = config.k_rrf;
  options.missing = config.rrf_missing;
  options.cutoff = config.k;
  options.run_tag = config.run_tag;
  return fuse(nonempty, config.fusion_method, options);
}

Ranking gen_qr_single(const Topic& query, const PipelineResources& resources,
                      const PipelineConfig& config) {
  require(resources, true);
  const auto& index = *resources.index;
  const auto prompt = build_qr_prompt(resources.instructions->base(), query.title, config.style);
  const auto keywords = parse_keywords(complete(*resources.generator, prompt), config.keyword_mode);
  WeightedQuery q = raw_query(query, index);
  if (keywords.empty() && !config.fallback_raw) throw empty_reformulation(query);
  for (const auto& keyword : keywords) q.append_text(keyword, index.tokenizer(), config.beta);
  return search(index, q, config.k, config.bm25, config.run_tag);
}

MethodResult run_method(const Topic& query, const PipelineResources& resources,
                        const PipelineConfig& config) {
  config.validate();
  require(resources, config.method != Method::raw);
  const auto& index = *resources.index;
  MethodResult result;
  if (config.method == Method::raw) {
    result.query = raw_query(query, index);
    result.ranking = search(index, *result.query, config.k, config.bm25, config.run_tag);
    return result;
  }
  std::vector<Document> feedback;
  if (config.feedback != FeedbackMode::none) {
    feedback = select_feedback(query, resources, config);
    for (const auto& d : feedback) result.feedback_doc_ids.push_back(d.doc_id);
  }
  const std::vector<Document>* context = feedback.empty() ? nullptr : &feedback;
  if (config.method == Method::ensemble) {
    result.query = gen_qr_ensemble(query, resources, config, &result.records, context);
    result.ranking = search(index, *result.query, config.k, config.bm25, config.run_tag);
  } else {
    result.ranking = gen_qr_fusion(query, resources, config, &result.records, context);
  }
  return result;
}

Method parse_method(std::string_view name) {
  if (name == "raw" || name == "bm25") return Method::raw;
  if (name == "ensemble") return Method::ensemble;
  if (name == "fusion") return Method::fusion;
  throw ValidationError("unknown method '" + std::string(name) +
                        "' (expected raw, ensemble or fusion)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::raw: return "raw";
    case Method::ensemble: return "ensemble";
    case Method::fusion: return "fusion";
  }
  return "raw";
}

FeedbackMode parse_feedback_mode(std::string_view name) {
  if (name == "none") return FeedbackMode::none;
  if (name == "prf") return FeedbackMode::prf;
  if (name == "oracle") return FeedbackMode::oracle;
  throw ValidationError("unknown feedback mode '" + std::string(name) +
                        "' (expected none, prf or oracle)");
}

std::string_view to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::none: return "none";
    case FeedbackMode::prf: return "prf";
    case FeedbackMode::oracle: return "oracle";
  }
  return "none";
}

}  // namespace qrkit
