#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpex/boe.hpp"
#include "corpex/dataset.hpp"
#include "corpex/embeddings.hpp"
#include "corpex/svm.hpp"
#include "corpex/transforms.hpp"

namespace corpex {

struct SplitCounts {
  size_t train = 0;
  size_t valid = 0;
  size_t test = 0;
};

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct Split {
  std::vector<LabeledParagraph> train, valid, test;
  std::vector<std::string> classes;  // first-seen order
  SplitCounts per_class;             // identical for every class
  uint64_t seed = 0;
};

// Shuffles each class with its own seed-derived stream, then takes
// train/valid/test in order; larger classes are downsampled by truncation.
// With site_disjoint no site contributes to two parts.  Throws DataError
// naming the first class that is too small.
Split balanced_split(std::span<const LabeledParagraph> data,
                     const SplitCounts& counts, uint64_t seed,
                     bool site_disjoint = false);

// counts = floor(ratio * smallest_class), bumped so every part with a
// positive ratio is non-empty.
Split balanced_split(std::span<const LabeledParagraph> data,
                     const SplitRatios& ratios, uint64_t seed,
                     bool site_disjoint = false);

enum class ClassifierKind { NaiveBayes, Svm, BoeSum, BoeAvg, Majority };

constexpr std::array<ClassifierKind, 5> kAllClassifiers = {
    ClassifierKind::NaiveBayes, ClassifierKind::Svm, ClassifierKind::BoeSum,
    ClassifierKind::BoeAvg, ClassifierKind::Majority};

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(std::string_view id);  // ConfigError

struct ExperimentConfig {
  std::string setting;  // display name; empty -> manipulation id
  std::string train_domain;
  std::string test_domain;  // equals train_domain unless transfer
  ClassifierKind classifier = ClassifierKind::NaiveBayes;
  Manipulation manipulation = Manipulation::Full;
  double nb_alpha = 1.0;
  SvmConfig svm;
  BoeConfig boe;  // its seed/pooling are overridden by `seed`/`classifier`
  uint64_t seed = 1;
};

struct PredictionRecord {
  std::string paragraph_id;
  std::string gold;
  std::string predicted;
  // Signed confidence, positive favors classes[0]: NB log-posterior margin,
  // SVM decision value, BoE probability margin.
  double score = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::array<std::string, 2> classes;
  double accuracy = 0.0;
  std::array<std::array<size_t, 2>, 2> confusion{};  // [gold][predicted]
  std::vector<PredictionRecord> predictions;
  // One line per pipeline stage naming the manipulation it applied; all
  // three parts must go through the same one.
  std::vector<std::string> audit;
  double wall_seconds = 0.0;  // reported separately, never in report JSON
};

// Exact-match fraction.  Throws DataError on length mismatch or empty input.
double accuracy(std::span<const std::string> predicted,
                std::span<const std::string> gold);

// Applies the manipulation to every part, trains the configured classifier
// on train (BoE also snapshots on valid), and scores test.  `embeddings`
// is required for the BoE classifiers.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const Split& split,
                                const EmbeddingTable* embeddings = nullptr);

// Trains on `source`'s train/valid and evaluates on `target`'s test.  The
// label schemes must agree (DataError otherwise).
ExperimentReport cross_domain(const ExperimentConfig& config,
                              const Split& source, const Split& target,
                              const EmbeddingTable* embeddings = nullptr);

struct GridSpec {
  std::vector<ClassifierKind> classifiers;
  std::vector<Manipulation> manipulations;
  ExperimentConfig base;  // hyperparameter/domain template
  uint64_t seed = 1;
  size_t workers = 1;
};

// Runs every classifier x manipulation cell; cell seeds are derived from
// (seed, classifier, manipulation), so the grid shape does not perturb any
// cell and workers only change the wall clock.  Reports come back in grid
// order (classifier-major).  Pass `target` to evaluate transfer.
std::vector<ExperimentReport> run_grid(const GridSpec& grid,
                                       const Split& split,
                                       const EmbeddingTable* embeddings = nullptr,
                                       const Split* target = nullptr);

// Accuracy table, classifiers as rows and settings as columns, percentages
// with one decimal.
std::string grid_markdown(std::span<const ExperimentReport> reports);

nlohmann::json to_json(const ExperimentReport& report);
void write_predictions_jsonl(const ExperimentReport& report,
                             const std::filesystem::path& path);

}  // namespace corpex
