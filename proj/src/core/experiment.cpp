#include "experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <variant>

#include "diag.hpp"
#include "error.hpp"
#include "index.hpp"
#include "parallel.hpp"
#include "significance.hpp"
#include "text.hpp"
#include "trec_io.hpp"

namespace qrkit {
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// YAML helpers

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!node.IsMap()) throw ValidationError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string list;
      for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      throw ValidationError("unknown key '" + key + "' in " + where + " (allowed: " + list + ")");
    }
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    std::string expected = "a string";
    if constexpr (std::is_same_v<T, bool>) expected = "true or false";
    else if constexpr (std::is_integral_v<T>) expected = "an integer";
    else if constexpr (std::is_floating_point_v<T>) expected = "a number";
    throw ValidationError(field + ": expected " + expected);
  }
}

template <class T>
void read_opt(const YAML::Node& parent, const char* key, T& out, const std::string& where) {
  const auto node = parent[key];
  if (node) out = scalar<T>(node, where + "." + key);
}

std::size_t read_count(const YAML::Node& node, const std::string& field) {
  const auto v = scalar<long long>(node, field);
  if (v < 0) throw ValidationError(field + " must be >= 0 (got " + std::to_string(v) + ")");
  return static_cast<std::size_t>(v);
}

IdfVariant parse_idf(std::string_view name) {
  if (name == "lucene") return IdfVariant::lucene;
  if (name == "robertson") return IdfVariant::robertson;
  throw ValidationError("unknown idf variant '" + std::string(name) +
                        "' (expected lucene or robertson)");
}

MissingRank parse_missing(std::string_view name) {
  if (name == "ignore") return MissingRank::ignore;
  if (name == "impute") return MissingRank::impute;
  throw ValidationError("unknown rrf_missing '" + std::string(name) +
                        "' (expected ignore or impute)");
}

ContextPosition parse_position(std::string_view name) {
  if (name == "prepend") return ContextPosition::prepend;
  if (name == "append") return ContextPosition::append;
  throw ValidationError("unknown context_position '" + std::string(name) +
                        "' (expected prepend or append)");
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return text::is_ascii_alnum(c) || c == '_' || c == '-' || c == '.';
  });
}

VariantSpec parse_variant(const YAML::Node& node, std::string where, bool require_name) {
  check_keys(node,
             {"name", "method", "n_instructions", "beta", "feedback", "feedback_depth",
              "fusion", "k_rrf", "rrf_missing", "filter", "keyword_mode", "style",
              "context_position", "k", "dedup_keywords", "fallback_raw", "bm25",
              "instructions"},
             where);
  VariantSpec v;
  if (node["name"]) {
    v.name = scalar<std::string>(node["name"], where + ".name");
    where += " '" + v.name + "'";
  } else if (require_name) {
    throw ValidationError(where + ": missing 'name'");
  }
  auto& c = v.config;
  auto word = [&](const char* key) { return scalar<std::string>(node[key], where + "." + key); };
  if (node["method"]) c.method = parse_method(word("method"));
  if (node["n_instructions"]) c.n_instructions = read_count(node["n_instructions"], where + ".n_instructions");
  read_opt(node, "beta", c.beta, where);
  if (node["feedback"]) c.feedback = parse_feedback_mode(word("feedback"));
  if (node["feedback_depth"]) c.feedback_depth = read_count(node["feedback_depth"], where + ".feedback_depth");
  if (node["fusion"]) c.fusion_method = parse_fusion_method(word("fusion"));
  read_opt(node, "k_rrf", c.k_rrf, where);
  if (node["rrf_missing"]) c.rrf_missing = parse_missing(word("rrf_missing"));
  read_opt(node, "filter", c.filter, where);
  if (node["keyword_mode"]) c.keyword_mode = parse_keyword_mode(word("keyword_mode"));
  if (node["style"]) c.style = parse_prompt_style(word("style"));
  if (node["context_position"]) c.context_position = parse_position(word("context_position"));
  if (node["k"]) c.k = read_count(node["k"], where + ".k");
  read_opt(node, "dedup_keywords", c.dedup_keywords, where);
  read_opt(node, "fallback_raw", c.fallback_raw, where);
  read_opt(node, "instructions", v.instructions, where);
  if (const auto bm = node["bm25"]) {
    check_keys(bm, {"k1", "b", "idf"}, where + ".bm25");
    read_opt(bm, "k1", c.bm25.k1, where + ".bm25");
    read_opt(bm, "b", c.bm25.b, where + ".bm25");
    if (bm["idf"]) c.bm25.idf = parse_idf(scalar<std::string>(bm["idf"], where + ".bm25.idf"));
  }
  if (!v.name.empty()) c.run_tag = v.name;
  return v;
}

GeneratorConfig parse_generator(const YAML::Node& node) {
  const std::string where = "generator";
  check_keys(node,
             {"provider", "model", "top_p", "top_k", "repetition_penalty", "max_new_tokens",
              "temperature", "endpoint", "extended_sampling", "max_in_flight", "max_attempts",
              "initial_backoff_ms", "timeout_seconds"},
             where);
  GeneratorConfig g;
  if (node["provider"]) g.provider = parse_provider(scalar<std::string>(node["provider"], "generator.provider"));
  read_opt(node, "model", g.model_name, where);
  read_opt(node, "top_p", g.top_p, where);
  read_opt(node, "top_k", g.top_k, where);
  read_opt(node, "repetition_penalty", g.repetition_penalty, where);
  read_opt(node, "max_new_tokens", g.max_new_tokens, where);
  read_opt(node, "temperature", g.temperature, where);
  read_opt(node, "endpoint", g.endpoint, where);
  read_opt(node, "extended_sampling", g.extended_sampling, where);
  read_opt(node, "max_in_flight", g.max_in_flight, where);
  read_opt(node, "max_attempts", g.max_attempts, where);
  if (node["initial_backoff_ms"]) {
    g.initial_backoff = std::chrono::milliseconds(
        scalar<long long>(node["initial_backoff_ms"], "generator.initial_backoff_ms"));
  }
  read_opt(node, "timeout_seconds", g.timeout_seconds, where);
  return g;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

TokenizerConfig parse_tokenizer(const YAML::Node& t, const fs::path& base_dir) {
  TokenizerConfig config;
  check_keys(t, {"lowercase", "stopwords", "stemming", "stopword_path"}, "tokenizer");
  read_opt(t, "lowercase", config.lowercase, "tokenizer");
  read_opt(t, "stopwords", config.stopwords, "tokenizer");
  read_opt(t, "stemming", config.stemming, "tokenizer");
  if (t["stopword_path"]) {
    config.stopword_path =
        resolve(base_dir, scalar<std::string>(t["stopword_path"], "tokenizer.stopword_path")).string();
  }
  return config;
}

std::vector<VariantSpec> default_variants() {
  VariantSpec raw;
  raw.name = "bm25";
  raw.config.method = Method::raw;
  raw.config.run_tag = raw.name;
  VariantSpec ens;
  ens.name = "ensemble";
  ens.config.run_tag = ens.name;
  return {raw, ens};
}

std::vector<Measure> default_measures() {
  return parse_measure_list("ndcg@10,ndcg@20,p@10,map,rr(rel=2),recall@10");
}

// ---------------------------------------------------------------------------
// Execution

struct Inputs {
  InvertedIndex index;
  std::vector<Topic> topics;
  Qrels qrels;
  std::map<std::string, InstructionSet> sets;
  std::shared_ptr<Generator> generator;
};

Inputs load_inputs(const ExperimentSpec& spec, std::shared_ptr<Generator> generator) {
  spec.validate();
  Inputs in;
  in.index = InvertedIndex::build(read_corpus_jsonl(spec.corpus.string()), spec.tokenizer,
                                  spec.parallelism);
  in.topics = read_topics(spec.topics.string());
  in.qrels = read_qrels(spec.qrels.string());
  for (const auto& v : spec.variants) {
    const auto& name = v.instructions.empty() ? spec.instructions : v.instructions;
    if (!in.sets.count(name)) in.sets.emplace(name, load_instruction_set(name));
  }
  if (generator) {
    in.generator = std::move(generator);
  } else {
    auto g = spec.generator;
    g.seed = spec.seed;
    in.generator = make_generator(g, spec.cache_dir);
  }
  return in;
}

using QueryOutcome = std::variant<MethodResult, std::string>;

std::vector<QueryOutcome> execute_variant(const Inputs& in, const ExperimentSpec& spec,
                                          const VariantSpec& v) {
  PipelineConfig config = v.config;
  config.parallelism = 1;  // queries are the unit of concurrency here
  PipelineResources res;
  res.index = &in.index;
  res.instructions = &in.sets.at(v.instructions.empty() ? spec.instructions : v.instructions);
  res.generator = in.generator.get();
  res.qrels = &in.qrels;
  return parallel_map(in.topics.size(), spec.parallelism, [&](std::size_t i) -> QueryOutcome {
    try {
      return run_method(in.topics[i], res, config);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
  });
}

// Collects failures into `failed` and throws when too many queries failed.
void record_failures(const std::vector<Topic>& topics, const std::vector<QueryOutcome>& outcomes,
                     const std::string& label, std::map<std::string, std::string>& failed) {
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (const auto* err = std::get_if<std::string>(&outcomes[i])) {
      failed.emplace(topics[i].qid, label + ": " + *err);
    }
  }
}

void check_failure_budget(const ExperimentSpec& spec, std::size_t topic_count,
                          const std::map<std::string, std::string>& failed) {
  if (failed.empty()) return;
  if (static_cast<double>(failed.size()) > spec.max_failure_fraction * topic_count) {
    const auto& first = *failed.begin();
    throw Error(std::to_string(failed.size()) + " of " + std::to_string(topic_count) +
                " queries failed (limit " + text::format_fixed(spec.max_failure_fraction * 100, 0) +
                "%); first: " + first.first + ": " + first.second);
  }
  for (const auto& [qid, reason] : failed) diag::warn("query " + qid + " skipped in all variants: " + reason);
}

RunFile collect_run(const std::vector<Topic>& topics, const std::vector<QueryOutcome>& outcomes,
                    const std::map<std::string, std::string>& failed) {
  RunFile run;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (failed.count(topics[i].qid)) continue;
    const auto& r = std::get<MethodResult>(outcomes[i]);
    if (!r.ranking.empty()) run.push_back(r.ranking);
  }
  return run;
}

std::string provenance_lines(const std::vector<Topic>& topics,
                             const std::vector<QueryOutcome>& outcomes,
                             const std::map<std::string, std::string>& failed) {
  std::string out;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (failed.count(topics[i].qid)) continue;
    const auto& r = std::get<MethodResult>(outcomes[i]);
    if (!r.feedback_doc_ids.empty()) {
      nlohmann::ordered_json j;
      j["qid"] = topics[i].qid;
      j["feedback_doc_ids"] = r.feedback_doc_ids;
      out += j.dump() + "\n";
    }
    for (const auto& rec : r.records) out += to_json_line(rec) + "\n";
  }
  return out;
}

Qrels without(const Qrels& qrels, const std::map<std::string, std::string>& failed) {
  Qrels kept;
  for (const auto& j : qrels.judgments()) {
    if (!failed.count(j.qid)) kept.add(j.qid, j.doc_id, j.grade);
  }
  return kept;
}

std::string fixed6(double v) { return text::format_fixed(v, 6); }

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::vector<Comparison> compare(const ExperimentSpec& spec,
                                const std::vector<VariantOutcome>& outcomes) {
  const auto base_it = std::find_if(outcomes.begin(), outcomes.end(),
                                    [&](const auto& o) { return o.name == spec.baseline; });
  std::vector<Comparison> all;
  for (std::size_t m = 0; m < spec.measures.size(); ++m) {
    const auto base_col = base_it->report.column(m);
    std::vector<std::size_t> tested_idx;
    std::vector<double> p_values;
    for (const auto& o : outcomes) {
      if (o.name == spec.baseline) continue;
      Comparison c;
      c.variant = o.name;
      c.measure = m;
      const auto col = o.report.column(m);
      if (col.size() != base_col.size() ||
          !std::equal(col.begin(), col.end(), base_col.begin(),
                      [](const auto& a, const auto& b) { return a.first == b.first; })) {
        throw Error("paired test on misaligned query sets: " + o.name + " vs " + spec.baseline +
                    " for " + spec.measures[m].name());
      }
      std::vector<double> a, b;
      for (const auto& [_, v] : col) a.push_back(v);
      for (const auto& [_, v] : base_col) b.push_back(v);
      if (a.size() >= 2) {
        try {
          c.test = paired_t_test(a, b);
          c.tested = true;
        } catch (const Error&) {
          c.tested = false;
        }
      }
      if (c.tested) {
        tested_idx.push_back(all.size());
        p_values.push_back(c.test.p);
      }
      all.push_back(c);
    }
    const auto rejected = holm_bonferroni(p_values, spec.alpha);
    for (std::size_t i = 0; i < tested_idx.size(); ++i) all[tested_idx[i]].significant = rejected[i];
  }
  return all;
}

const Comparison* find_comparison(const std::vector<Comparison>& cs, const std::string& variant,
                                  std::size_t m) {
  for (const auto& c : cs) {
    if (c.variant == variant && c.measure == m) return &c;
  }
  return nullptr;
}

std::string render_report(const ExperimentSpec& spec, const ExperimentResult& r) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"variant", ""};
  for (const auto& m : spec.measures) header.push_back(m.label());
  rows.push_back(header);
  for (const auto& o : r.variants) {
    const bool is_base = o.name == spec.baseline;
    std::vector<std::string> row{o.name, is_base ? "—" : ""};
    for (std::size_t m = 0; m < spec.measures.size(); ++m) {
      std::string cell = o.report.evaluated[m] ? text::format_short(o.report.aggregate[m], 3) : "-";
      if (!is_base) {
        const auto* c = find_comparison(r.comparisons, o.name, m);
        if (c && c->significant) cell += "†";
      }
      row.push_back(cell);
    }
    rows.push_back(row);
  }
  std::string out = format_aligned(rows);
  out += "\n† paired t-test against " + spec.baseline + ", Holm-corrected p < " +
         format_g(spec.alpha) + " per measure\n";
  out += "topics: " + std::to_string(r.query_count) + ", skipped after failures: " +
         std::to_string(r.failed_qids.size()) + "\n";
  if (!r.variants.empty()) {
    out += "evaluated queries:";
    const auto& rep = r.variants.front().report;
    for (std::size_t m = 0; m < spec.measures.size(); ++m) {
      out += " " + spec.measures[m].label() + "=" + std::to_string(rep.evaluated[m]);
    }
    out += "\n";
  }
  return out;
}

std::string render_report_csv(const ExperimentSpec& spec, const ExperimentResult& r) {
  std::string out = "variant,measure,value,evaluated,mean_difference,t,p_value,significant\n";
  for (const auto& o : r.variants) {
    for (std::size_t m = 0; m < spec.measures.size(); ++m) {
      out += o.name + "," + spec.measures[m].name() + "," +
             (o.report.evaluated[m] ? fixed6(o.report.aggregate[m]) : "") + "," +
             std::to_string(o.report.evaluated[m]) + ",";
      const auto* c = find_comparison(r.comparisons, o.name, m);
      if (c && c->tested) {
        out += fixed6(c->test.mean_difference) + "," + fixed6(c->test.t) + "," +
               format_g(c->test.p) + "," + (c->significant ? "1" : "0");
      } else {
        out += ",,,";
      }
      out += "\n";
    }
  }
  return out;
}

std::string render_per_query_csv(const ExperimentSpec& spec, const ExperimentResult& r) {
  std::string out = "qid,variant,measure,value,delta_vs_baseline\n";
  const VariantOutcome* base = nullptr;
  for (const auto& o : r.variants) {
    if (o.name == spec.baseline) base = &o;
  }
  if (r.variants.empty()) return out;
  const auto& qids = r.variants.front().report.per_query;
  for (std::size_t q = 0; q < qids.size(); ++q) {
    for (const auto& o : r.variants) {
      for (std::size_t m = 0; m < spec.measures.size(); ++m) {
        const auto& v = o.report.per_query[q].values[m];
        const auto& bv = base->report.per_query[q].values[m];
        out += qids[q].qid + "," + o.name + "," + spec.measures[m].name() + "," +
               (v ? fixed6(*v) : "") + "," + (v && bv ? fixed6(*v - *bv) : "") + "\n";
      }
    }
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

// ---------------------------------------------------------------------------

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "beta") return SweepAxis::beta;
  if (name == "n_instructions" || name == "n") return SweepAxis::n_instructions;
  if (name == "feedback_m" || name == "m") return SweepAxis::feedback_m;
  throw ValidationError("unknown sweep axis '" + std::string(name) +
                        "' (expected beta, n_instructions or feedback_m)");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::beta: return "beta";
    case SweepAxis::n_instructions: return "n_instructions";
    case SweepAxis::feedback_m: return "feedback_m";
  }
  return "beta";
}

const VariantSpec& ExperimentSpec::variant(const std::string& name) const {
  for (const auto& v : variants) {
    if (v.name == name) return v;
  }
  throw ValidationError("no variant named '" + name + "'");
}

void ExperimentSpec::validate() const {
  std::vector<std::string> missing;
  auto need = [&](const fs::path& p, const char* field) {
    if (p.empty()) missing.push_back(std::string(field) + " (not set)");
    else if (!fs::exists(p)) missing.push_back(std::string(field) + " (" + p.string() + ")");
  };
  need(corpus, "corpus");
  need(topics, "topics");
  need(qrels, "qrels");
  if (!missing.empty()) {
    throw ValidationError("missing required paths: " + text::join(missing, ", "));
  }
  if (variants.empty()) throw ValidationError("at least one variant is required");
  std::set<std::string> names;
  std::map<std::string, std::size_t> set_sizes;
  for (const auto& v : variants) {
    if (!valid_name(v.name)) {
      throw ValidationError("variant name '" + v.name +
                            "' must be nonempty and use only letters, digits, '_', '-', '.'");
    }
    if (!names.insert(v.name).second) throw ValidationError("duplicate variant '" + v.name + "'");
    try {
      v.config.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("variant '" + v.name + "': " + e.what());
    }
    if (v.config.method == Method::raw) continue;
    const auto& set_name = v.instructions.empty() ? instructions : v.instructions;
    if (!set_sizes.count(set_name)) set_sizes[set_name] = load_instruction_set(set_name).size();
    if (v.config.n_instructions > set_sizes[set_name]) {
      throw ValidationError("variant '" + v.name + "': n_instructions=" +
                            std::to_string(v.config.n_instructions) + " exceeds the " +
                            std::to_string(set_sizes[set_name]) + " instructions of '" +
                            set_name + "'");
    }
  }
  if (!names.count(baseline)) {
    throw ValidationError("baseline '" + baseline + "' is not among the variants");
  }
  if (measures.empty()) throw ValidationError("at least one metric is required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    throw ValidationError("max_failure_fraction must be in [0, 1]");
  }
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  generator.validate();
  for (const auto& s : sweeps) {
    const auto& v = variant(s.variant);
    if (v.config.method == Method::raw) {
      throw ValidationError("sweep over '" + s.variant + "': raw variants have no " +
                            std::string(to_string(s.axis)) + " parameter");
    }
    if (s.values.empty()) throw ValidationError("sweep over '" + s.variant + "' has no values");
  }
}

ExperimentSpec parse_spec(std::string_view yaml, const fs::path& base_dir,
                          const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), "", e.msg);
  }
  if (!root || root.IsNull()) throw ValidationError(source + ": empty spec");
  check_keys(root,
             {"corpus", "topics", "qrels", "instructions", "tokenizer", "generator", "variants",
              "baseline", "metrics", "output", "seed", "cache_dir", "parallelism", "alpha",
              "max_failure_fraction", "sweeps"},
             source);
  ExperimentSpec spec;
  auto path_of = [&](const char* key) {
    return root[key] ? resolve(base_dir, scalar<std::string>(root[key], key)) : fs::path{};
  };
  spec.corpus = path_of("corpus");
  spec.topics = path_of("topics");
  spec.qrels = path_of("qrels");
  spec.output_dir = root["output"] ? path_of("output") : base_dir / "out";
  if (root["cache_dir"]) spec.cache_dir = path_of("cache_dir").string();
  if (root["instructions"]) {
    spec.instructions = scalar<std::string>(root["instructions"], "instructions");
    const auto as_path = resolve(base_dir, spec.instructions);
    if (fs::exists(as_path)) spec.instructions = as_path.string();
  }
  if (const auto t = root["tokenizer"]) spec.tokenizer = parse_tokenizer(t, base_dir);
  if (const auto g = root["generator"]) spec.generator = parse_generator(g);
  read_opt(root, "seed", spec.seed, "spec");
  spec.generator.seed = spec.seed;
  if (root["parallelism"]) {
    spec.parallelism = static_cast<unsigned>(read_count(root["parallelism"], "parallelism"));
  }
  read_opt(root, "alpha", spec.alpha, "spec");
  read_opt(root, "max_failure_fraction", spec.max_failure_fraction, "spec");

  if (const auto vs = root["variants"]) {
    if (!vs.IsSequence()) throw ValidationError("variants: expected a list");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      auto v = parse_variant(vs[i], "variants[" + std::to_string(i) + "]", true);
      if (!v.instructions.empty()) {
        const auto as_path = resolve(base_dir, v.instructions);
        if (fs::exists(as_path)) v.instructions = as_path.string();
      }
      spec.variants.push_back(std::move(v));
    }
  } else {
    spec.variants = default_variants();
  }
  if (root["baseline"]) spec.baseline = scalar<std::string>(root["baseline"], "baseline");
  else spec.baseline = spec.variants.empty() ? "" : spec.variants.front().name;

  if (const auto m = root["metrics"]) {
    if (m.IsSequence()) {
      for (const auto& item : m) spec.measures.push_back(parse_measure(scalar<std::string>(item, "metrics")));
    } else {
      spec.measures = parse_measure_list(scalar<std::string>(m, "metrics"));
    }
  } else {
    spec.measures = default_measures();
  }

  if (const auto ss = root["sweeps"]) {
    if (!ss.IsSequence()) throw ValidationError("sweeps: expected a list");
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const std::string where = "sweeps[" + std::to_string(i) + "]";
      check_keys(ss[i], {"axis", "variant", "values"}, where);
      SweepSpec s;
      if (!ss[i]["axis"] || !ss[i]["variant"] || !ss[i]["values"]) {
        throw ValidationError(where + ": axis, variant and values are required");
      }
      s.axis = parse_sweep_axis(scalar<std::string>(ss[i]["axis"], where + ".axis"));
      s.variant = scalar<std::string>(ss[i]["variant"], where + ".variant");
      if (!ss[i]["values"].IsSequence()) throw ValidationError(where + ".values: expected a list");
      for (const auto& x : ss[i]["values"]) s.values.push_back(scalar<double>(x, where + ".values"));
      spec.sweeps.push_back(std::move(s));
    }
  }
  spec.validate();
  return spec;
}

ToolConfig parse_tool_config(std::string_view yaml, const fs::path& base_dir,
                             const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), "", e.msg);
  }
  ToolConfig config;
  if (!root || root.IsNull()) return config;
  check_keys(root, {"tokenizer", "generator", "pipeline", "instructions", "seed", "cache_dir"},
             source);
  if (const auto t = root["tokenizer"]) config.tokenizer = parse_tokenizer(t, base_dir);
  if (const auto g = root["generator"]) config.generator = parse_generator(g);
  if (const auto p = root["pipeline"]) {
    auto v = parse_variant(p, "pipeline", false);
    config.pipeline = v.config;
    if (!v.instructions.empty()) config.instructions = v.instructions;
  }
  if (root["instructions"]) config.instructions = scalar<std::string>(root["instructions"], "instructions");
  if (!config.instructions.empty()) {
    const auto as_path = resolve(base_dir, config.instructions);
    if (fs::exists(as_path)) config.instructions = as_path.string();
  }
  if (root["seed"]) config.seed = scalar<std::int64_t>(root["seed"], "seed");
  if (root["cache_dir"]) config.cache_dir = resolve(base_dir, scalar<std::string>(root["cache_dir"], "cache_dir")).string();
  if (config.seed) config.generator.seed = *config.seed;
  config.pipeline.validate();
  config.generator.validate();
  return config;
}

ToolConfig load_tool_config(const fs::path& path) {
  const auto content = text::read_file(path.string());
  return parse_tool_config(content, fs::absolute(path).parent_path(), path.string());
}

ExperimentSpec load_spec(const fs::path& path) {
  const auto content = text::read_file(path.string());
  return parse_spec(content, fs::absolute(path).parent_path(), path.string());
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::shared_ptr<Generator> generator) {
  Inputs in = load_inputs(spec, std::move(generator));
  ExperimentResult result;
  result.query_count = in.topics.size();

  std::vector<std::vector<QueryOutcome>> outcomes;
  std::map<std::string, std::string> failed;
  for (const auto& v : spec.variants) {
    outcomes.push_back(execute_variant(in, spec, v));
    record_failures(in.topics, outcomes.back(), v.name, failed);
  }

  ensure_dir(spec.output_dir);
  std::string failures;
  for (const auto& [qid, reason] : failed) failures += qid + "\t" + reason + "\n";
  text::write_file_atomic((spec.output_dir / "failures.txt").string(), failures);
  check_failure_budget(spec, in.topics.size(), failed);
  for (const auto& [qid, reason] : failed) result.failed_qids.push_back(qid);
  result.failure_reasons = failed;

  const Qrels qrels = without(in.qrels, failed);
  ensure_dir(spec.output_dir / "runs");
  ensure_dir(spec.output_dir / "provenance");
  for (std::size_t i = 0; i < spec.variants.size(); ++i) {
    const auto& v = spec.variants[i];
    VariantOutcome o;
    o.name = v.name;
    o.run = collect_run(in.topics, outcomes[i], failed);
    o.report = evaluate_run(o.run, qrels, spec.measures);
    write_run((spec.output_dir / "runs" / (v.name + ".run")).string(), o.run);
    text::write_file_atomic((spec.output_dir / "provenance" / (v.name + ".jsonl")).string(),
                            provenance_lines(in.topics, outcomes[i], failed));
    result.variants.push_back(std::move(o));
  }
  result.comparisons = compare(spec, result.variants);
  result.report_text = render_report(spec, result);
  result.report_csv = render_report_csv(spec, result);
  result.per_query_csv = render_per_query_csv(spec, result);
  text::write_file_atomic((spec.output_dir / "report.txt").string(), result.report_text);
  text::write_file_atomic((spec.output_dir / "report.csv").string(), result.report_csv);
  text::write_file_atomic((spec.output_dir / "per_query.csv").string(), result.per_query_csv);
  return result;
}

std::vector<double> normalize_sweep_values(SweepAxis axis, std::vector<double> values) {
  if (axis == SweepAxis::beta) {
    values.push_back(0.0);
    values.push_back(1.0);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

SweepResult run_sweep(const ExperimentSpec& spec, const SweepSpec& sweep,
                      std::shared_ptr<Generator> generator) {
  const auto& base = spec.variant(sweep.variant);
  if (base.config.method == Method::raw) {
    throw ValidationError("sweep over '" + sweep.variant + "': raw variants have no " +
                          std::string(to_string(sweep.axis)) + " parameter");
  }
  SweepResult result;
  result.sweep = sweep;
  result.values = normalize_sweep_values(sweep.axis, sweep.values);
  if (result.values.empty()) throw ValidationError("sweep has no values");

  std::vector<VariantSpec> points;
  for (double x : result.values) {
    VariantSpec v = base;
    const std::string field = std::string(to_string(sweep.axis)) + "=" + format_g(x);
    switch (sweep.axis) {
      case SweepAxis::beta:
        if (!(x >= 0.0 && x <= 1.0)) throw ValidationError(field + " out of range [0, 1]");
        v.config.beta = x;
        break;
      case SweepAxis::n_instructions:
        if (x < 1 || x != std::floor(x)) throw ValidationError(field + " must be an integer >= 1");
        v.config.n_instructions = static_cast<std::size_t>(x);
        break;
      case SweepAxis::feedback_m:
        if (x < 0 || x != std::floor(x)) throw ValidationError(field + " must be an integer >= 0");
        if (x == 0) {
          v.config.feedback = FeedbackMode::none;
        } else {
          if (v.config.feedback == FeedbackMode::none) v.config.feedback = FeedbackMode::prf;
          v.config.feedback_depth = static_cast<std::size_t>(x);
        }
        break;
    }
    points.push_back(std::move(v));
  }
  ExperimentSpec point_spec = spec;
  point_spec.sweeps.clear();
  point_spec.variants = points;
  for (std::size_t i = 0; i < points.size(); ++i) point_spec.variants[i].name += "_" + std::to_string(i);
  point_spec.baseline = point_spec.variants.front().name;
  for (auto& v : point_spec.variants) v.config.run_tag = base.name;
  point_spec.validate();

  Inputs in = load_inputs(point_spec, std::move(generator));
  std::vector<std::vector<QueryOutcome>> outcomes;
  std::map<std::string, std::string> failed;
  for (std::size_t i = 0; i < points.size(); ++i) {
    outcomes.push_back(execute_variant(in, point_spec, point_spec.variants[i]));
    record_failures(in.topics, outcomes.back(), std::string(to_string(sweep.axis)) + "=" +
                    format_g(result.values[i]), failed);
  }
  check_failure_budget(spec, in.topics.size(), failed);
  const Qrels qrels = without(in.qrels, failed);

  result.csv = std::string(to_string(sweep.axis));
  for (const auto& m : spec.measures) result.csv += "," + m.name();
  result.csv += "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto report = evaluate_run(collect_run(in.topics, outcomes[i], failed), qrels, spec.measures);
    result.rows.push_back(report.aggregate);
    result.csv += format_g(result.values[i]);
    for (std::size_t m = 0; m < spec.measures.size(); ++m) {
      result.csv += "," + (report.evaluated[m] ? fixed6(report.aggregate[m]) : std::string());
    }
    result.csv += "\n";
  }
  ensure_dir(spec.output_dir / "sweeps");
  result.path = spec.output_dir / "sweeps" /
                (std::string(to_string(sweep.axis)) + "_" + sweep.variant + ".csv");
  text::write_file_atomic(result.path.string(), result.csv);
  return result;
}

std::string format_aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_width(row[c]));
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += row[c];
      line.append(widths[c] - display_width(row[c]), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string render_reference_table(std::string_view csv, const std::string& title) {
  std::vector<std::vector<std::string>> rows;
  for (auto line : text::split_lines(csv)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    if (line.find('"') != std::string_view::npos) {
      throw ValidationError("reference tables do not support quoted CSV cells");
    }
    rows.push_back(text::split(line, ','));
  }
  if (rows.empty()) throw ValidationError("reference table '" + title + "' has no header");
  std::string out = title.empty() ? "" : title + "\n";
  return out + format_aligned(rows);
}

std::string render_reference_tables(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) {
    if (!out.empty()) out += "\n";
    out += render_reference_table(text::read_file(f.string()), f.stem().string());
  }
  return out;
}

}  // namespace qrkit
