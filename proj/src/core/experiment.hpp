#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "generation.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "significance.hpp"
#include "tokenizer.hpp"

namespace qrkit {

struct VariantSpec {
  std::string name;
  PipelineConfig config;
  std::string instructions;  // empty: the experiment-wide set
};

enum class SweepAxis { beta, n_instructions, feedback_m };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::beta;
  std::string variant;
  std::vector<double> values;
};

struct ExperimentSpec {
  std::filesystem::path corpus;
  std::filesystem::path topics;
  std::filesystem::path qrels;
  std::string instructions = "general";
  TokenizerConfig tokenizer;
  GeneratorConfig generator;
  std::vector<VariantSpec> variants;
  std::string baseline;
  std::vector<Measure> measures;
  std::filesystem::path output_dir;
  std::int64_t seed = 42;
  std::string cache_dir;
  unsigned parallelism = 1;
  double alpha = 0.05;
  // Abort when more than this fraction of queries fail.
  double max_failure_fraction = 0.10;
  std::vector<SweepSpec> sweeps;

  const VariantSpec& variant(const std::string& name) const;
  /// Throws ValidationError; reports every missing path in one message.
  void validate() const;
};

/// YAML spec. Relative paths resolve against the spec file's directory.
ExperimentSpec parse_spec(std::string_view yaml, const std::filesystem::path& base_dir,
                          const std::string& source = "<spec>");
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Settings for the single-step commands (index, search, reformulate, ...).
/// Keys: tokenizer, generator, pipeline (the keys of a variant), instructions,
/// seed, cache_dir. Every key is optional.
struct ToolConfig {
  TokenizerConfig tokenizer;
  GeneratorConfig generator;
  PipelineConfig pipeline;
  std::string instructions = "general";
  std::optional<std::int64_t> seed;
  std::string cache_dir;
};

ToolConfig parse_tool_config(std::string_view yaml, const std::filesystem::path& base_dir = {},
                             const std::string& source = "<config>");
ToolConfig load_tool_config(const std::filesystem::path& path);

struct VariantOutcome {
  std::string name;
  RunFile run;
  MeasureReport report;
};

struct Comparison {
  std::string variant;
  std::size_t measure = 0;
  PairedTTest test;
  bool tested = false;       // false when the sample was too small or degenerate
  bool significant = false;  // after Holm correction across variants, per measure
};

struct ExperimentResult {
  std::vector<VariantOutcome> variants;
  std::vector<Comparison> comparisons;
  std::vector<std::string> failed_qids;  // sorted
  std::map<std::string, std::string> failure_reasons;
  std::size_t query_count = 0;
  std::string report_text;
  std::string report_csv;
  std::string per_query_csv;
};

/// Runs every variant over every topic, writes
///   runs/<variant>.run, provenance/<variant>.jsonl, report.txt, report.csv,
///   per_query.csv, failures.txt
/// under spec.output_dir. `generator` overrides the one built from the spec.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                std::shared_ptr<Generator> generator = nullptr);

struct SweepResult {
  SweepSpec sweep;
  std::vector<double> values;  // as executed
  std::vector<std::vector<double>> rows;  // aggregate per value, parallel to spec.measures
  std::string csv;
  std::filesystem::path path;
};

/// One pipeline execution per value with everything else fixed. Writes
/// sweeps/<axis>_<variant>.csv under spec.output_dir.
SweepResult run_sweep(const ExperimentSpec& spec, const SweepSpec& sweep,
                      std::shared_ptr<Generator> generator = nullptr);

/// The sweep values actually executed: sorted, deduplicated, and for the
/// beta axis always containing 0 and 1.
std::vector<double> normalize_sweep_values(SweepAxis axis, std::vector<double> values);

/// Renders a stored reference-values CSV ('#' comment lines, header, rows)
/// as an aligned text table.
std::string render_reference_table(std::string_view csv, const std::string& title = {});
/// Every *.csv in `dir`, by file name, separated by blank lines.
std::string render_reference_tables(const std::filesystem::path& dir);

/// Pads cells to aligned columns. Widths count UTF-8 code points.
std::string format_aligned(const std::vector<std::vector<std::string>>& rows);

}  // namespace qrkit
