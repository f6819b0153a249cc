#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpex/corpus.hpp"
#include "corpex/divergence.hpp"
#include "corpex/experiments.hpp"
#include "corpex/synthetic.hpp"
#include "corpex/wikify.hpp"

namespace corpex {

// One corpus declaration.  File corpora are loaded and cleaned from disk;
// synth corpora are generated from the config's synth block.
struct CorpusDecl {
  enum class Source { File, Synth };
  std::string name;
  Source source = Source::File;
  std::filesystem::path path;  // file source only
  CorpusFormat format = CorpusFormat::JsonLines;
  Legality legality = Legality::Unspecified;
};

struct TaggerConfig {
  std::string provider = "baseline";  // "baseline" | "conllu"
  std::optional<std::filesystem::path> lexicon;   // baseline overlay
  std::vector<std::filesystem::path> conllu_files;
};

struct EmbeddingsConfig {
  std::optional<std::filesystem::path> path;
  // Generate vectors for the synthetic vocabulary instead of loading a
  // file; only valid when every experiment corpus is synth-sourced.
  std::optional<size_t> synthetic_dim;
};

struct SplitConfig {
  std::optional<SplitCounts> counts;  // wins over ratios when present
  SplitRatios ratios;
  bool site_disjoint = false;
};

struct DivergenceConfig {
  DivergenceMetric metric = DivergenceMetric::Jsd;
  int trials = 10;
  bool raw_l1 = false;
  std::vector<std::string> corpora;  // default: every declared corpus
};

struct ExperimentsConfig {
  std::vector<ClassifierKind> classifiers;
  std::vector<Manipulation> manipulations;
  std::vector<std::string> train;  // corpus names forming the train domain
  std::vector<std::string> test;   // transfer target; empty = in-domain
  double nb_alpha = 1.0;
  SvmConfig svm;
  BoeConfig boe;
};

struct KbConfig {
  std::string mode = "offline";  // "offline" | "http"
  std::optional<std::filesystem::path> snapshot;
  HttpKbOptions http;
};

struct WikifyConfig {
  std::string ner = "baseline";  // "baseline" | "import"
  std::optional<std::filesystem::path> mentions_path;
  KbConfig kb;
  CoverageCounting counting = CoverageCounting::PerMention;
  std::vector<std::string> corpora;  // default: every declared corpus
};

struct ReportConfig {
  std::vector<std::filesystem::path> inputs;  // prior JSON artifacts
};

struct CleanConfigSection {
  CleanOptions options;
};

struct RunConfig {
  uint64_t seed = 1;
  size_t workers = 1;
  bool offline = false;
  std::filesystem::path out_dir = "out";
  std::vector<CorpusDecl> corpora;
  TaggerConfig tagger;
  EmbeddingsConfig embeddings;
  std::optional<SyntheticSpec> synth;
  CleanConfigSection clean;
  SplitConfig split;
  DivergenceConfig divergence;
  ExperimentsConfig experiments;
  WikifyConfig wikify;
  ReportConfig report;
  // Canonical echo of the validated config, defaults filled; written into
  // every bundle and stable under re-validation.
  nlohmann::json resolved;
};

// Schema and cross-reference validation with config.<field.path> error
// messages; fills defaults and rebuilds `resolved`.
RunConfig validate_config_json(const nlohmann::json& raw);
RunConfig validate_config(const std::filesystem::path& path);

struct CliOverrides {
  std::optional<uint64_t> seed;
  std::optional<size_t> workers;
  bool offline = false;
  std::optional<std::filesystem::path> out_dir;
};

// Applies --seed/--workers/--offline/--out on top of a validated config and
// refreshes the resolved echo.
void apply_overrides(RunConfig& config, const CliOverrides& overrides);

enum class Command { Clean, Divergence, Classify, Transfer, Wikify, Synth, Report };

std::string_view to_string(Command command);

// Executes one command, writing its artifact bundle under
// out_dir/<command>-seed<seed>/.  The bundle is assembled in a scratch
// directory and atomically renamed in on success; failures leave no partial
// bundle behind.  Throws the module error on failure.
std::filesystem::path run_command(Command command, const RunConfig& config);

// Full argv entry point: parses flags, maps errors to exit codes (0 ok,
// 2 config, 3 data, 4 training, 5 network) and prints machine-readable
// error JSON on stderr.
int cli_main(int argc, const char* const* argv);

}  // namespace corpex
