#include "qrkit/qrkit.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <nlohmann/json.hpp>
#include <string>

#include "bm25.hpp"
#include "diag.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "fusion.hpp"
#include "generation.hpp"
#include "index.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "prompts.hpp"
#include "text.hpp"
#include "trec_io.hpp"

struct qrk_index {
  qrkit::InvertedIndex index;
};

struct qrk_generator {
  std::shared_ptr<qrkit::Generator> generator;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_warn_mutex;
qrk_warning_fn g_warn_fn = nullptr;
void* g_warn_user = nullptr;

qrk_status fail(qrk_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class Fn>
qrk_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return QRK_OK;
  } catch (const qrkit::ParseError& e) {
    return fail(QRK_ERR_PARSE, e.what());
  } catch (const qrkit::ValidationError& e) {
    return fail(QRK_ERR_VALIDATION, e.what());
  } catch (const qrkit::IoError& e) {
    return fail(QRK_ERR_IO, e.what());
  } catch (const qrkit::GenerationError& e) {
    return fail(QRK_ERR_GENERATION, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(QRK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(QRK_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(QRK_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(QRK_ERR_RUNTIME, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " must not be NULL");
}

qrkit::ToolConfig tool_config(const char* path) {
  return path ? qrkit::load_tool_config(path) : qrkit::ToolConfig{};
}

qrkit::ExperimentSpec load_with_overrides(const char* spec_path,
                                          const qrk_experiment_overrides* o) {
  need(spec_path, "spec_path");
  auto spec = qrkit::load_spec(spec_path);
  if (o) {
    if (o->has_seed) {
      spec.seed = o->seed;
      spec.generator.seed = o->seed;
    }
    if (o->cache_dir) spec.cache_dir = o->cache_dir;
    if (o->output_dir) spec.output_dir = o->output_dir;
    if (o->parallelism) spec.parallelism = o->parallelism;
  }
  spec.validate();
  return spec;
}

}  // namespace

extern "C" {

const char* qrk_version(void) { return "0.1.0"; }

const char* qrk_last_error(void) { return g_last_error.c_str(); }

void qrk_free_string(char* s) { std::free(s); }

void qrk_set_warning_handler(qrk_warning_fn fn, void* user_data) {
  std::lock_guard lock(g_warn_mutex);
  g_warn_fn = fn;
  g_warn_user = user_data;
  if (!fn) {
    qrkit::diag::set_warning_sink({});
    return;
  }
  qrkit::diag::set_warning_sink([](const std::string& message) {
    std::lock_guard inner(g_warn_mutex);
    if (g_warn_fn) g_warn_fn(message.c_str(), g_warn_user);
  });
}

qrk_status qrk_index_build(const char* corpus_jsonl_path, const char* config_path,
                           unsigned threads, qrk_index** out) {
  if (!corpus_jsonl_path || !out) return fail(QRK_ERR_INVALID_ARGUMENT, "corpus path and out are required");
  return guarded([&] {
    const auto config = tool_config(config_path);
    auto handle = std::make_unique<qrk_index>();
    handle->index = qrkit::InvertedIndex::build(qrkit::read_corpus_jsonl(corpus_jsonl_path),
                                                config.tokenizer, threads ? threads : 1);
    *out = handle.release();
  });
}

qrk_status qrk_index_load(const char* snapshot_path, qrk_index** out) {
  if (!snapshot_path || !out) return fail(QRK_ERR_INVALID_ARGUMENT, "path and out are required");
  return guarded([&] {
    auto handle = std::make_unique<qrk_index>();
    handle->index = qrkit::InvertedIndex::load(snapshot_path);
    *out = handle.release();
  });
}

qrk_status qrk_index_save(const qrk_index* index, const char* snapshot_path) {
  if (!index || !snapshot_path) return fail(QRK_ERR_INVALID_ARGUMENT, "index and path are required");
  return guarded([&] { index->index.save(snapshot_path); });
}

qrk_status qrk_index_stats(const qrk_index* index, char** json_out) {
  if (!index || !json_out) return fail(QRK_ERR_INVALID_ARGUMENT, "index and json_out are required");
  return guarded([&] {
    const auto& tc = index->index.tokenizer().config();
    nlohmann::ordered_json j;
    j["doc_count"] = index->index.doc_count();
    j["term_count"] = index->index.term_count();
    j["avg_doc_len"] = index->index.avg_doc_len();
    j["tokenizer"] = {{"lowercase", tc.lowercase},
                      {"stopwords", tc.stopwords},
                      {"stemming", tc.stemming},
                      {"stopword_path", tc.stopword_path}};
    *json_out = dup_string(j.dump(2) + "\n");
  });
}

void qrk_index_free(qrk_index* index) { delete index; }

qrk_status qrk_search_topics(const qrk_index* index, const char* topics_path,
                             const char* config_path, const char* run_tag, char** run_out) {
  if (!index || !topics_path || !run_out) {
    return fail(QRK_ERR_INVALID_ARGUMENT, "index, topics_path and run_out are required");
  }
  return guarded([&] {
    const auto config = tool_config(config_path);
    const std::string tag = run_tag ? run_tag : "bm25";
    qrkit::RunFile run;
    for (const auto& topic : qrkit::read_topics(topics_path)) {
      const auto q = qrkit::WeightedQuery::from_text(topic.qid, topic.title, index->index.tokenizer());
      auto ranking = qrkit::search(index->index, q, config.pipeline.k, config.pipeline.bm25, tag);
      if (!ranking.empty()) run.push_back(std::move(ranking));
    }
    *run_out = dup_string(qrkit::format_run(run));
  });
}

qrk_status qrk_generator_create(const char* config_path, int has_seed, int64_t seed,
                                const char* cache_dir, qrk_generator** out) {
  if (!out) return fail(QRK_ERR_INVALID_ARGUMENT, "out is required");
  return guarded([&] {
    const auto config = tool_config(config_path);
    auto gc = config.generator;
    if (has_seed) gc.seed = seed;
    const std::string dir = cache_dir ? cache_dir : config.cache_dir;
    auto handle = std::make_unique<qrk_generator>();
    handle->generator = qrkit::make_generator(gc, dir);
    *out = handle.release();
  });
}

qrk_status qrk_generator_complete(qrk_generator* generator, const char* prompt, char** text_out) {
  if (!generator || !prompt || !text_out) {
    return fail(QRK_ERR_INVALID_ARGUMENT, "generator, prompt and text_out are required");
  }
  return guarded([&] { *text_out = dup_string(qrkit::complete(*generator->generator, prompt)); });
}

void qrk_generator_free(qrk_generator* generator) { delete generator; }

qrk_status qrk_paraphrase(qrk_generator* generator, const char* base, size_t n,
                          const char* set_name, char** set_out) {
  if (!generator || !base || !set_out) {
    return fail(QRK_ERR_INVALID_ARGUMENT, "generator, base and set_out are required");
  }
  return guarded([&] {
    const auto set = qrkit::paraphrase_instructions(base, n, *generator->generator,
                                                    set_name ? set_name : "paraphrased");
    *set_out = dup_string(qrkit::format_instruction_set(set));
  });
}

qrk_status qrk_reformulate(const qrk_index* index, qrk_generator* generator,
                           const char* topics_path, const char* qrels_path,
                           const char* config_path, const char* instructions,
                           const char* run_tag, char** run_out, char** provenance_out) {
  if (!index || !generator || !topics_path || !run_out) {
    return fail(QRK_ERR_INVALID_ARGUMENT, "index, generator, topics_path and run_out are required");
  }
  return guarded([&] {
    auto config = tool_config(config_path);
    if (run_tag) config.pipeline.run_tag = run_tag;
    config.pipeline.validate();
    const auto set = qrkit::load_instruction_set(instructions ? instructions : config.instructions);
    qrkit::Qrels qrels;
    if (qrels_path) qrels = qrkit::read_qrels(qrels_path);
    qrkit::PipelineResources res;
    res.index = &index->index;
    res.instructions = &set;
    res.generator = generator->generator.get();
    res.qrels = qrels_path ? &qrels : nullptr;
    qrkit::RunFile run;
    std::string provenance;
    for (const auto& topic : qrkit::read_topics(topics_path)) {
      auto result = qrkit::run_method(topic, res, config.pipeline);
      if (!result.ranking.empty()) run.push_back(std::move(result.ranking));
      for (const auto& rec : result.records) provenance += qrkit::to_json_line(rec) + "\n";
    }
    *run_out = dup_string(qrkit::format_run(run));
    if (provenance_out) *provenance_out = dup_string(provenance);
  });
}

qrk_status qrk_fuse_files(const char* const* run_paths, size_t count, const char* method,
                          double k_rrf, int impute_missing, size_t cutoff, const char* run_tag,
                          char** run_out) {
  if (!run_paths || count == 0 || !run_out) {
    return fail(QRK_ERR_INVALID_ARGUMENT, "at least one run path and run_out are required");
  }
  return guarded([&] {
    std::vector<qrkit::RunFile> runs;
    for (size_t i = 0; i < count; ++i) {
      need(run_paths[i], "run path");
      runs.push_back(qrkit::read_run(run_paths[i]));
    }
    qrkit::FusionOptions options;
    options.k_rrf = k_rrf;
    options.missing = impute_missing ? qrkit::MissingRank::impute : qrkit::MissingRank::ignore;
    options.cutoff = cutoff;
    if (run_tag) options.run_tag = run_tag;
    const auto m = qrkit::parse_fusion_method(method ? method : "rrf");
    *run_out = dup_string(qrkit::format_run(qrkit::fuse_runs(runs, m, options)));
  });
}

qrk_status qrk_evaluate_files(const char* run_path, const char* qrels_path, const char* measures,
                              int per_query, char** report_out) {
  if (!run_path || !qrels_path || !report_out) {
    return fail(QRK_ERR_INVALID_ARGUMENT, "run_path, qrels_path and report_out are required");
  }
  return guarded([&] {
    const auto ms = qrkit::parse_measure_list(measures ? measures : "ndcg@10,p@10,map,rr");
    const auto report = qrkit::evaluate_run(qrkit::read_run(run_path), qrkit::read_qrels(qrels_path), ms);
    std::string out;
    auto line = [&](const std::string& name, const std::string& qid, double v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.4f", v);
      out += name + "\t" + qid + "\t" + buf + "\n";
    };
    if (per_query) {
      for (const auto& q : report.per_query) {
        for (size_t m = 0; m < ms.size(); ++m) {
          if (q.values[m]) line(ms[m].name(), q.qid, *q.values[m]);
        }
      }
    }
    for (size_t m = 0; m < ms.size(); ++m) {
      out += ms[m].name() + "\tnum_q\t" + std::to_string(report.evaluated[m]) + "\n";
      line(ms[m].name(), "all", report.aggregate[m]);
    }
    *report_out = dup_string(out);
  });
}

qrk_status qrk_experiment_run(const char* spec_path, const qrk_experiment_overrides* overrides,
                              int run_sweeps, char** report_out) {
  if (!spec_path) return fail(QRK_ERR_INVALID_ARGUMENT, "spec_path is required");
  return guarded([&] {
    const auto spec = load_with_overrides(spec_path, overrides);
    const auto result = qrkit::run_experiment(spec);
    if (run_sweeps) {
      for (const auto& s : spec.sweeps) qrkit::run_sweep(spec, s);
    }
    if (report_out) *report_out = dup_string(result.report_text);
  });
}

qrk_status qrk_experiment_sweep(const char* spec_path, const qrk_experiment_overrides* overrides,
                                const char* axis, const char* variant, const char* values,
                                char** csv_out) {
  if (!spec_path) return fail(QRK_ERR_INVALID_ARGUMENT, "spec_path is required");
  return guarded([&] {
    const auto spec = load_with_overrides(spec_path, overrides);
    std::vector<qrkit::SweepSpec> sweeps;
    if (axis) {
      need(variant, "variant");
      need(values, "values");
      qrkit::SweepSpec s;
      s.axis = qrkit::parse_sweep_axis(axis);
      s.variant = variant;
      for (const auto& v : qrkit::text::split(values, ',')) {
        const auto t = std::string(qrkit::text::trim(v));
        char* end = nullptr;
        const double x = std::strtod(t.c_str(), &end);
        if (t.empty() || *end != '\0') throw qrkit::ValidationError("sweep value '" + t + "' is not a number");
        s.values.push_back(x);
      }
      sweeps.push_back(std::move(s));
    } else {
      sweeps = spec.sweeps;
      if (sweeps.empty()) throw qrkit::ValidationError("the spec defines no sweeps");
    }
    std::string out;
    for (const auto& s : sweeps) {
      if (!out.empty()) out += "\n";
      out += qrkit::run_sweep(spec, s).csv;
    }
    if (csv_out) *csv_out = dup_string(out);
  });
}

qrk_status qrk_render_reference_tables(const char* path, char** text_out) {
  if (!path || !text_out) return fail(QRK_ERR_INVALID_ARGUMENT, "path and text_out are required");
  return guarded([&] {
    const std::filesystem::path p(path);
    if (std::filesystem::is_directory(p)) {
      *text_out = dup_string(qrkit::render_reference_tables(p));
    } else {
      *text_out = dup_string(
          qrkit::render_reference_table(qrkit::text::read_file(path), p.stem().string()));
    }
  });
}

}  // extern "C"
