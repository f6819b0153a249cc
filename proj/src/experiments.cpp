#include "corpex/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "corpex/errors.hpp"
#include "corpex/naive_bayes.hpp"
#include "corpex/rng.hpp"

namespace corpex {

using nlohmann::json;

namespace {

struct ClassBuckets {
  std::vector<std::string> classes;  // first-seen
  std::map<std::string, std::vector<LabeledParagraph>> members;
};

ClassBuckets bucket_by_label(std::span<const LabeledParagraph> data) {
  ClassBuckets buckets;
  for (const LabeledParagraph& ex : data) {
    auto [it, inserted] = buckets.members.try_emplace(ex.label);
    if (inserted) buckets.classes.push_back(ex.label);
    it->second.push_back(ex);
  }
  return buckets;
}

}  // namespace

Split balanced_split(std::span<const LabeledParagraph> data,
                     const SplitCounts& counts, uint64_t seed,
                     bool site_disjoint) {
  if (data.empty()) throw DataError("cannot split an empty data set");
  const size_t need = counts.train + counts.valid + counts.test;
  if (need == 0) throw DataError("split counts are all zero");

  ClassBuckets buckets = bucket_by_label(data);
  Split split;
  split.classes = buckets.classes;
  split.per_class = counts;
  split.seed = seed;

  for (const std::string& label : buckets.classes) {
    std::vector<LabeledParagraph>& pool = buckets.members.at(label);
    if (pool.size() < need)
      throw DataError("class '" + label + "' has " +
                      std::to_string(pool.size()) + " paragraphs, needs " +
                      std::to_string(need));
    Rng rng = Rng::derive(seed, "split:" + label);

    std::array<std::vector<LabeledParagraph>*, 3> parts = {
        &split.train, &split.valid, &split.test};
    std::array<size_t, 3> target = {counts.train, counts.valid, counts.test};
    std::array<size_t, 3> start{};
    for (int p = 0; p < 3; ++p) start[p] = parts[p]->size();

    if (!site_disjoint) {
      rng.shuffle(pool);
      size_t offset = 0;
      for (int p = 0; p < 3; ++p) {
        for (size_t i = 0; i < target[p]; ++i)
          parts[p]->push_back(pool[offset + i]);
        offset += target[p];
      }
      continue;
    }

    // Group the class by site, shuffle sites, deal whole sites to the
    // parts in order; overshoot is truncated, never reassigned.
    std::vector<std::string> sites;
    std::map<std::string, std::vector<const LabeledParagraph*>> by_site;
    for (const LabeledParagraph& ex : pool) {
      auto [it, inserted] = by_site.try_emplace(ex.site_id);
      if (inserted) sites.push_back(ex.site_id);
      it->second.push_back(&ex);
    }
    rng.shuffle(sites);
    size_t cur = 0;
    for (const std::string& site : sites) {
      while (cur < 3 && parts[cur]->size() - start[cur] >= target[cur]) ++cur;
      if (cur == 3) break;
      for (const LabeledParagraph* ex : by_site.at(site))
        parts[cur]->push_back(*ex);
    }
    for (int p = 0; p < 3; ++p) {
      size_t have = parts[p]->size() - start[p];
      if (have < target[p])
        throw DataError("class '" + label +
                        "' cannot fill a site-disjoint split: part needs " +
                        std::to_string(target[p]) + ", sites provide " +
                        std::to_string(have));
      parts[p]->resize(start[p] + target[p]);
    }
  }
  return split;
}

Split balanced_split(std::span<const LabeledParagraph> data,
                     const SplitRatios& ratios, uint64_t seed,
                     bool site_disjoint) {
  if (data.empty()) throw DataError("cannot split an empty data set");
  for (double r : {ratios.train, ratios.valid, ratios.test})
    if (r < 0.0) throw ConfigError("split ratios must be >= 0");
  if (ratios.train + ratios.valid + ratios.test > 1.0 + 1e-9)
    throw ConfigError("split ratios must sum to at most 1");

  ClassBuckets buckets = bucket_by_label(data);
  size_t smallest = SIZE_MAX;
  std::string smallest_label;
  for (const std::string& label : buckets.classes) {
    size_t size = buckets.members.at(label).size();
    if (size < smallest) {
      smallest = size;
      smallest_label = label;
    }
  }

  auto part = [&](double ratio) {
    return static_cast<size_t>(ratio * static_cast<double>(smallest));
  };
  SplitCounts counts{part(ratios.train), part(ratios.valid),
                     part(ratios.test)};
  // every requested part must end up non-empty
  if (ratios.train > 0.0 && counts.train == 0) counts.train = 1;
  if (ratios.valid > 0.0 && counts.valid == 0) counts.valid = 1;
  if (ratios.test > 0.0 && counts.test == 0) counts.test = 1;
  while (counts.train + counts.valid + counts.test > smallest) {
    size_t* largest = &counts.train;
    if (counts.valid > *largest) largest = &counts.valid;
    if (counts.test > *largest) largest = &counts.test;
    if (*largest <= 1)
      throw DataError("class '" + smallest_label + "' has " +
                      std::to_string(smallest) +
                      " paragraphs, too few for the requested ratios");
    --*largest;
  }
  return balanced_split(data, counts, seed, site_disjoint);
}

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::NaiveBayes: return "nb";
    case ClassifierKind::Svm: return "svm";
    case ClassifierKind::BoeSum: return "boe-sum";
    case ClassifierKind::BoeAvg: return "boe-avg";
    case ClassifierKind::Majority: return "majority";
  }
  return "?";
}

ClassifierKind classifier_from_string(std::string_view id) {
  for (ClassifierKind kind : kAllClassifiers)
    if (to_string(kind) == id) return kind;
  throw ConfigError("unknown classifier id: " + std::string(id));
}

double accuracy(std::span<const std::string> predicted,
                std::span<const std::string> gold) {
  if (predicted.size() != gold.size())
    throw DataError("prediction/gold length mismatch: " +
                    std::to_string(predicted.size()) + " vs " +
                    std::to_string(gold.size()));
  if (predicted.empty()) throw DataError("cannot score an empty prediction set");
  size_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == gold[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {

std::vector<LabeledParagraph> manipulate(
    std::span<const LabeledParagraph> part, Manipulation manipulation) {
  std::vector<LabeledParagraph> out;
  out.reserve(part.size());
  for (const LabeledParagraph& ex : part)
    out.push_back({apply_manipulation(ex.paragraph, manipulation), ex.label,
                   ex.site_id});
  return out;
}

std::array<std::string, 2> binary_classes(
    std::span<const LabeledParagraph> train) {
  std::vector<std::string> seen;
  for (const LabeledParagraph& ex : train)
    if (std::find(seen.begin(), seen.end(), ex.label) == seen.end())
      seen.push_back(ex.label);
  if (seen.size() != 2)
    throw DataError("binary classifier needs exactly 2 classes, got " +
                    std::to_string(seen.size()));
  return {seen[0], seen[1]};
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const Split& split,
                                const EmbeddingTable* embeddings) {
  if (split.train.empty()) throw DataError("experiment split has no training data");
  if (split.test.empty()) throw DataError("experiment split has no test data");
  auto begin = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = config;
  if (report.config.setting.empty())
    report.config.setting = std::string(to_string(config.manipulation));

  std::vector<LabeledParagraph> train =
      manipulate(split.train, config.manipulation);
  std::vector<LabeledParagraph> valid =
      manipulate(split.valid, config.manipulation);
  std::vector<LabeledParagraph> test =
      manipulate(split.test, config.manipulation);
  for (auto [name, part] : {std::pair<const char*, size_t>{"train", train.size()},
                            {"valid", valid.size()},
                            {"test", test.size()}}) {
    report.audit.push_back(std::string(name) + ": " +
                           std::string(to_string(config.manipulation)) +
                           " applied to " + std::to_string(part) +
                           " paragraphs");
  }

  report.classes = binary_classes(train);

  // label + signed score (positive favors classes[0]) per test paragraph
  std::vector<std::pair<std::string, double>> outputs;
  outputs.reserve(test.size());
  switch (config.classifier) {
    case ClassifierKind::NaiveBayes: {
      NbModel model = train_nb(train, config.nb_alpha);
      for (const LabeledParagraph& ex : test) {
        NbPrediction p = predict_nb(model, ex.paragraph);
        outputs.emplace_back(p.label, p.log_posterior[0] - p.log_posterior[1]);
      }
      break;
    }
    case ClassifierKind::Svm: {
      SvmModel model = train_svm(train, config.svm);
      for (const LabeledParagraph& ex : test) {
        SvmPrediction p = predict_svm(model, ex.paragraph);
        outputs.emplace_back(p.label, p.decision);
      }
      break;
    }
    case ClassifierKind::BoeSum:
    case ClassifierKind::BoeAvg: {
      if (!embeddings)
        throw ConfigError(
            "bag-of-embeddings classifier needs an embedding table");
      BoeConfig boe = config.boe;
      boe.seed = config.seed;
      boe.pooling = config.classifier == ClassifierKind::BoeSum
                        ? Pooling::Sum
                        : Pooling::Average;
      BoeTrainResult trained = train_boe(train, valid, *embeddings, boe);
      for (const LabeledParagraph& ex : test) {
        BoePrediction p = predict_boe(trained.model, ex.paragraph, *embeddings);
        outputs.emplace_back(p.label,
                             p.probabilities[0] - p.probabilities[1]);
      }
      break;
    }
    case ClassifierKind::Majority: {
      size_t first = 0;
      for (const LabeledParagraph& ex : train)
        if (ex.label == report.classes[0]) ++first;
      double frac0 = static_cast<double>(first) /
                     static_cast<double>(train.size());
      std::string majority =
          frac0 >= 0.5 ? report.classes[0] : report.classes[1];
      for (size_t i = 0; i < test.size(); ++i)
        outputs.emplace_back(majority, 2.0 * frac0 - 1.0);
      break;
    }
  }

  for (size_t i = 0; i < test.size(); ++i) {
    const LabeledParagraph& ex = test[i];
    size_t gold;
    if (ex.label == report.classes[0]) {
      gold = 0;
    } else if (ex.label == report.classes[1]) {
      gold = 1;
    } else {
      throw DataError("label scheme mismatch: test label '" + ex.label +
                      "' never seen in training");
    }
    size_t pred = outputs[i].first == report.classes[0] ? 0 : 1;
    report.confusion[gold][pred] += 1;
    report.predictions.push_back({ex.paragraph.paragraph_id, ex.label,
                                  outputs[i].first, outputs[i].second});
  }
  report.accuracy =
      static_cast<double>(report.confusion[0][0] + report.confusion[1][1]) /
      static_cast<double>(test.size());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
          .count();
  return report;
}

ExperimentReport cross_domain(const ExperimentConfig& config,
                              const Split& source, const Split& target,
                              const EmbeddingTable* embeddings) {
  std::set<std::string> a(source.classes.begin(), source.classes.end());
  std::set<std::string> b(target.classes.begin(), target.classes.end());
  if (a != b) {
    std::string msg = "label scheme mismatch between domain pairs:";
    for (const std::string& label : a) msg += " " + label;
    msg += " vs";
    for (const std::string& label : b) msg += " " + label;
    throw DataError(msg);
  }
  Split merged;
  merged.train = source.train;
  merged.valid = source.valid;
  merged.test = target.test;
  merged.classes = source.classes;
  merged.per_class = source.per_class;
  merged.seed = source.seed;
  return run_experiment(config, merged, embeddings);
}

std::vector<ExperimentReport> run_grid(const GridSpec& grid,
                                       const Split& split,
                                       const EmbeddingTable* embeddings,
                                       const Split* target) {
  if (grid.classifiers.empty() || grid.manipulations.empty())
    throw ConfigError("experiment grid needs classifiers and manipulations");

  std::vector<ExperimentConfig> cells;
  for (ClassifierKind classifier : grid.classifiers) {
    for (Manipulation manipulation : grid.manipulations) {
      ExperimentConfig config = grid.base;
      config.classifier = classifier;
      config.manipulation = manipulation;
      config.setting = std::string(to_string(manipulation));
      config.seed = grid.seed ^ fnv1a64(std::string(to_string(classifier)) +
                                        ":" +
                                        std::string(to_string(manipulation)));
      cells.push_back(std::move(config));
    }
  }

  std::vector<ExperimentReport> reports(cells.size());
  std::vector<std::exception_ptr> failures(cells.size());
  auto run_cell = [&](size_t i) {
    try {
      reports[i] = target ? cross_domain(cells[i], split, *target, embeddings)
                          : run_experiment(cells[i], split, embeddings);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  size_t workers = std::max<size_t>(1, grid.workers);
  if (workers == 1) {
    for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    for (size_t w = 0; w < std::min(workers, cells.size()); ++w) {
      threads.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < cells.size();
             i = next.fetch_add(1))
          run_cell(i);
      });
    }
    for (std::thread& t : threads) t.join();
  }
  for (const std::exception_ptr& failure : failures)
    if (failure) std::rethrow_exception(failure);
  return reports;
}

std::string grid_markdown(std::span<const ExperimentReport> reports) {
  std::vector<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const ExperimentReport& r : reports) {
    std::string row(to_string(r.config.classifier));
    const std::string& col = r.config.setting;
    if (std::find(rows.begin(), rows.end(), row) == rows.end())
      rows.push_back(row);
    if (std::find(cols.begin(), cols.end(), col) == cols.end())
      cols.push_back(col);
    cell[{row, col}] = r.accuracy;
  }
  std::string out = "| classifier |";
  for (const std::string& c : cols) out += " " + c + " |";
  out += "\n|---|";
  for (size_t i = 0; i < cols.size(); ++i) out += "---:|";
  out += "\n";
  char buf[32];
  for (const std::string& r : rows) {
    out += "| " + r + " |";
    for (const std::string& c : cols) {
      auto it = cell.find({r, c});
      if (it == cell.end()) {
        out += " - |";
      } else {
        std::snprintf(buf, sizeof buf, " %.1f |", it->second * 100.0);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

json to_json(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  json gamma = c.svm.gamma.kind == SvmGamma::Kind::Scale
                   ? json("scale")
                   : json(c.svm.gamma.value);
  json predictions = json::array();
  for (const PredictionRecord& p : report.predictions) {
    predictions.push_back({{"paragraph_id", p.paragraph_id},
                           {"gold", p.gold},
                           {"predicted", p.predicted},
                           {"score", p.score}});
  }
  // wall_seconds stays out on purpose: report JSON must be byte-identical
  // across runs with the same seed and config.
  return {{"config",
           {{"setting", c.setting},
            {"train_domain", c.train_domain},
            {"test_domain", c.test_domain},
            {"classifier", to_string(c.classifier)},
            {"manipulation", to_string(c.manipulation)},
            {"nb_alpha", c.nb_alpha},
            {"svm", {{"c", c.svm.c}, {"gamma", gamma}, {"tol", c.svm.tol}}},
            {"boe",
             {{"hidden_dim", c.boe.hidden_dim},
              {"learning_rate", c.boe.learning_rate},
              {"momentum", c.boe.momentum},
              {"epochs", c.boe.epochs},
              {"dropout", c.boe.dropout}}},
            {"seed", c.seed}}},
          {"classes", report.classes},
          {"accuracy", report.accuracy},
          {"confusion",
           {{report.confusion[0][0], report.confusion[0][1]},
            {report.confusion[1][0], report.confusion[1][1]}}},
          {"predictions", predictions},
          {"audit", report.audit}};
}

void write_predictions_jsonl(const ExperimentReport& report,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write predictions file: " + path.string());
  for (const PredictionRecord& p : report.predictions) {
    out << json{{"paragraph_id", p.paragraph_id},
                {"gold", p.gold},
                {"predicted", p.predicted},
                {"score", p.score}}
               .dump()
        << '\n';
  }
}

}  // namespace corpex
