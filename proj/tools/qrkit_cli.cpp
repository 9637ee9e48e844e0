// qrkit command line front end. Links only the C interface.
#include <qrkit/qrkit.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Globals {
  std::string config;
  std::optional<long long> seed;
  std::string cache_dir;
  std::string out;
};

int exit_code(qrk_status s) {
  switch (s) {
    case QRK_OK: return 0;
    case QRK_ERR_VALIDATION:
    case QRK_ERR_PARSE:
    case QRK_ERR_INVALID_ARGUMENT: return 2;
    default: return 1;
  }
}

int report(qrk_status s) {
  if (s != QRK_OK) std::cerr << "qrkit: error: " << qrk_last_error() << "\n";
  return exit_code(s);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// Takes ownership of `text`.
int emit(char* text, const std::string& path) {
  const std::string content = text ? text : "";
  qrk_free_string(text);
  if (path.empty() || path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return 0;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(content.data(), static_cast<std::streamsize>(content.size()))) {
    std::cerr << "qrkit: error: cannot write " << path << "\n";
    return 1;
  }
  return 0;
}

struct IndexHandle {
  qrk_index* p = nullptr;
  ~IndexHandle() { qrk_index_free(p); }
};

struct GeneratorHandle {
  qrk_generator* p = nullptr;
  ~GeneratorHandle() { qrk_generator_free(p); }
};

qrk_status open_index(const std::string& snapshot, const std::string& corpus,
                      const Globals& g, unsigned threads, IndexHandle& out) {
  if (!snapshot.empty()) return qrk_index_load(snapshot.c_str(), &out.p);
  return qrk_index_build(corpus.c_str(), opt(g.config), threads, &out.p);
}

qrk_status open_generator(const Globals& g, GeneratorHandle& out) {
  return qrk_generator_create(opt(g.config), g.seed.has_value(), g.seed.value_or(0),
                              opt(g.cache_dir), &out.p);
}

qrk_experiment_overrides overrides(const Globals& g, unsigned parallelism) {
  qrk_experiment_overrides o{};
  o.has_seed = g.seed.has_value();
  o.seed = g.seed.value_or(0);
  o.cache_dir = opt(g.cache_dir);
  o.output_dir = opt(g.out);
  o.parallelism = parallelism;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrkit: query reformulation, BM25 retrieval, fusion and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qrk_version()));

  Globals g;
  long long seed = 0;
  app.add_option("--config", g.config,
                 "YAML settings (tool config; the experiment spec for run and sweep)");
  auto* seed_opt = app.add_option("--seed", seed, "Generator seed");
  app.add_option("--cache-dir", g.cache_dir, "Generation cache directory");
  app.add_option("--out", g.out, "Output file (output directory for run and sweep)");
  app.fallthrough();

  // index
  auto* index_cmd = app.add_subcommand("index", "Build an index snapshot from a JSON-lines corpus");
  std::string corpus;
  unsigned threads = 1;
  index_cmd->add_option("corpus", corpus, "Corpus (.jsonl with doc_id and text)")->required();
  index_cmd->add_option("--threads", threads, "Indexing threads")->check(CLI::PositiveNumber);

  // paraphrase
  auto* para_cmd = app.add_subcommand("paraphrase", "Bootstrap an instruction set from a base instruction");
  std::string base, set_name = "paraphrased";
  std::size_t n = 10;
  para_cmd->add_option("base", base, "Base instruction")->required();
  para_cmd->add_option("-n", n, "Instructions in the resulting set")->check(CLI::PositiveNumber);
  para_cmd->add_option("--name", set_name, "Set name");

  // reformulate / search share the index source
  std::string snapshot, topics, qrels, instructions, tag, provenance;
  auto add_index_source = [&](CLI::App* cmd) {
    auto* a = cmd->add_option("--index", snapshot, "Index snapshot");
    auto* b = cmd->add_option("--corpus", corpus, "Corpus to index on the fly");
    a->excludes(b);
    cmd->add_option("--topics", topics, "Topics file (qid<TAB>title)")->required();
    cmd->add_option("--tag", tag, "Run tag");
  };
  auto* ref_cmd = app.add_subcommand("reformulate", "Reformulate topics and retrieve");
  add_index_source(ref_cmd);
  ref_cmd->add_option("--qrels", qrels, "Qrels (needed for oracle feedback)");
  ref_cmd->add_option("--instructions", instructions, "Instruction set name or file");
  ref_cmd->add_option("--provenance", provenance, "Write per-instruction records (JSON lines)");
  auto* search_cmd = app.add_subcommand("search", "BM25 retrieval with the raw topics");
  add_index_source(search_cmd);

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse TREC run files");
  std::vector<std::string> runs;
  std::string method = "rrf";
  double k_rrf = 60.0;
  bool impute = false;
  std::size_t cutoff = 0;
  fuse_cmd->add_option("runs", runs, "Run files")->required();
  fuse_cmd->add_option("--method", method, "rrf, score_sum or score_max");
  fuse_cmd->add_option("--k-rrf", k_rrf, "RRF constant");
  fuse_cmd->add_flag("--impute-missing", impute, "Missing documents rank |list|+1");
  fuse_cmd->add_option("--cutoff", cutoff, "Keep the top N (0 keeps all)");
  fuse_cmd->add_option("--tag", tag, "Run tag");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a run against qrels");
  std::string run_path, metrics = "ndcg@10,p@10,map,rr";
  bool per_query = false;
  eval_cmd->add_option("run", run_path, "Run file")->required();
  eval_cmd->add_option("qrels", qrels, "Qrels file")->required();
  eval_cmd->add_option("-m,--metrics", metrics, "Comma separated measures");
  eval_cmd->add_flag("-q,--per-query", per_query, "Per-query values too");

  // run / sweep
  std::string spec;
  unsigned parallelism = 0;
  bool no_sweeps = false;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment spec");
  run_cmd->add_option("spec", spec, "Experiment spec (defaults to --config)");
  run_cmd->add_option("--parallelism", parallelism, "Concurrent queries");
  run_cmd->add_flag("--no-sweeps", no_sweeps, "Skip the sweeps listed in the spec");
  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep over one variant");
  std::string axis, variant, values;
  sweep_cmd->add_option("spec", spec, "Experiment spec (defaults to --config)");
  sweep_cmd->add_option("--axis", axis, "beta, n_instructions or feedback_m");
  sweep_cmd->add_option("--variant", variant, "Variant to sweep");
  sweep_cmd->add_option("--values", values, "Comma separated values");
  sweep_cmd->add_option("--parallelism", parallelism, "Concurrent queries");

  auto* ref_tables = app.add_subcommand("reference", "Render stored reference-value tables");
  std::string ref_path;
  ref_tables->add_option("path", ref_path, "CSV file or directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  if (spec.empty()) spec = g.config;

  char* text = nullptr;
  if (*index_cmd) {
    if (g.out.empty()) {
      std::cerr << "qrkit: error: index needs --out for the snapshot\n";
      return 2;
    }
    IndexHandle idx;
    if (auto s = qrk_index_build(corpus.c_str(), opt(g.config), threads, &idx.p)) return report(s);
    if (auto s = qrk_index_save(idx.p, g.out.c_str())) return report(s);
    if (auto s = qrk_index_stats(idx.p, &text)) return report(s);
    return emit(text, "");
  }
  if (*para_cmd) {
    GeneratorHandle gen;
    if (auto s = open_generator(g, gen)) return report(s);
    if (auto s = qrk_paraphrase(gen.p, base.c_str(), n, set_name.c_str(), &text)) return report(s);
    return emit(text, g.out);
  }
  if (*ref_cmd || *search_cmd) {
    if (snapshot.empty() && corpus.empty()) {
      std::cerr << "qrkit: error: one of --index or --corpus is required\n";
      return 2;
    }
    IndexHandle idx;
    if (auto s = open_index(snapshot, corpus, g, 1, idx)) return report(s);
    if (*search_cmd) {
      if (auto s = qrk_search_topics(idx.p, topics.c_str(), opt(g.config), opt(tag), &text)) {
        return report(s);
      }
      return emit(text, g.out);
    }
    GeneratorHandle gen;
    if (auto s = open_generator(g, gen)) return report(s);
    char* prov = nullptr;
    if (auto s = qrk_reformulate(idx.p, gen.p, topics.c_str(), opt(qrels), opt(g.config),
                                 opt(instructions), opt(tag), &text,
                                 provenance.empty() ? nullptr : &prov)) {
      return report(s);
    }
    if (prov && emit(prov, provenance) != 0) {
      qrk_free_string(text);
      return 1;
    }
    return emit(text, g.out);
  }
  if (*fuse_cmd) {
    std::vector<const char*> paths;
    for (const auto& r : runs) paths.push_back(r.c_str());
    if (auto s = qrk_fuse_files(paths.data(), paths.size(), method.c_str(), k_rrf, impute, cutoff,
                                opt(tag), &text)) {
      return report(s);
    }
    return emit(text, g.out);
  }
  if (*eval_cmd) {
    if (auto s = qrk_evaluate_files(run_path.c_str(), qrels.c_str(), metrics.c_str(), per_query, &text)) {
      return report(s);
    }
    return emit(text, g.out);
  }
  if (*run_cmd || *sweep_cmd) {
    if (spec.empty()) {
      std::cerr << "qrkit: error: an experiment spec is required (positional or --config)\n";
      return 2;
    }
    const auto o = overrides(g, parallelism);
    if (*run_cmd) {
      if (auto s = qrk_experiment_run(spec.c_str(), &o, !no_sweeps, &text)) return report(s);
      return emit(text, "");
    }
    if (axis.empty() != variant.empty() || axis.empty() != values.empty()) {
      std::cerr << "qrkit: error: --axis, --variant and --values go together\n";
      return 2;
    }
    if (auto s = qrk_experiment_sweep(spec.c_str(), &o, opt(axis), opt(variant), opt(values), &text)) {
      return report(s);
    }
    return emit(text, "");
  }
  if (*ref_tables) {
    if (auto s = qrk_render_reference_tables(ref_path.c_str(), &text)) return report(s);
    return emit(text, g.out);
  }
  return 2;
}
