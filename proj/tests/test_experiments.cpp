#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "corpex/errors.hpp"
#include "corpex/experiments.hpp"
#include "corpex/rng.hpp"
#include "corpex/synthetic.hpp"
#include "helpers.hpp"

using namespace corpex;

namespace {

std::vector<LabeledParagraph> uniform_class(const std::string& label,
                                            size_t n, size_t sites = 10) {
  std::vector<LabeledParagraph> out;
  for (size_t i = 0; i < n; ++i) {
    TaggedParagraph p{label + "#" + std::to_string(i + 1),
                      tokenize("filler text " + label)};
    out.push_back({p, label, label + "-s" + std::to_string(1 + i % sites)});
  }
  return out;
}

std::set<std::string> ids_of(std::span<const LabeledParagraph> part) {
  std::set<std::string> ids;
  for (const auto& ex : part) ids.insert(ex.paragraph.paragraph_id);
  return ids;
}

size_t count_label(std::span<const LabeledParagraph> part,
                   const std::string& label) {
  size_t n = 0;
  for (const auto& ex : part) n += ex.label == label;
  return n;
}

// Two balanced legality-labeled domains with disjoint topics; separable.
std::vector<LabeledParagraph> separable_data(size_t per_class = 80) {
  SyntheticSpec spec;
  spec.lexicon_size_per_tag = 10;
  spec.length_min = 10;
  spec.length_max = 25;
  SyntheticDomain a;
  a.name = "shady";
  a.legality = Legality::Illegal;
  a.topic = "pill";
  a.pos_profile = {{Upos::NOUN, 0.5}, {Upos::VERB, 0.2}, {Upos::DET, 0.3}};
  a.paragraphs = per_class;
  a.sites = 8;
  SyntheticDomain b = a;
  b.name = "sunny";
  b.legality = Legality::Legal;
  b.topic = "cake";
  spec.domains = {a, b};
  SyntheticResult result = generate_synthetic_corpus(spec, 41);
  std::vector<LabeledParagraph> data = labeled_examples(result.domains[0]);
  std::vector<LabeledParagraph> legal = labeled_examples(result.domains[1]);
  data.insert(data.end(), legal.begin(), legal.end());
  return data;
}

}  // namespace

TEST_CASE("explicit counts reproduce the 456/57/58 split") {
  std::vector<LabeledParagraph> data = uniform_class("legal", 571);
  std::vector<LabeledParagraph> illegal = uniform_class("illegal", 571);
  data.insert(data.end(), illegal.begin(), illegal.end());

  Split split = balanced_split(data, SplitCounts{456, 57, 58}, 99);
  CHECK(split.train.size() == 912);
  CHECK(split.valid.size() == 114);
  CHECK(split.test.size() == 116);
  for (const std::string label : {"legal", "illegal"}) {
    CHECK(count_label(split.train, label) == 456);
    CHECK(count_label(split.valid, label) == 57);
    CHECK(count_label(split.test, label) == 58);
  }

  // parts disjoint by paragraph id, union within the input
  std::set<std::string> train_ids = ids_of(split.train);
  std::set<std::string> valid_ids = ids_of(split.valid);
  std::set<std::string> test_ids = ids_of(split.test);
  CHECK(train_ids.size() == 912);
  std::set<std::string> all_input = ids_of(data);
  for (const auto& ids : {train_ids, valid_ids, test_ids})
    for (const std::string& id : ids) CHECK(all_input.count(id) == 1);
  for (const std::string& id : valid_ids) CHECK(train_ids.count(id) == 0);
  for (const std::string& id : test_ids) {
    CHECK(train_ids.count(id) == 0);
    CHECK(valid_ids.count(id) == 0);
  }

  // same seed, same membership; different seed, different membership
  Split again = balanced_split(data, SplitCounts{456, 57, 58}, 99);
  CHECK(ids_of(again.train) == train_ids);
  Split other = balanced_split(data, SplitCounts{456, 57, 58}, 100);
  CHECK(ids_of(other.train) != train_ids);
}

TEST_CASE("ratios downsample the larger class") {
  std::vector<LabeledParagraph> data = uniform_class("small", 100);
  std::vector<LabeledParagraph> big = uniform_class("large", 200);
  data.insert(data.end(), big.begin(), big.end());
  Split split = balanced_split(data, SplitRatios{0.8, 0.1, 0.1}, 1);
  CHECK(split.per_class.train == 80);
  CHECK(split.per_class.valid == 10);
  CHECK(split.per_class.test == 10);
  CHECK(count_label(split.train, "large") == 80);
  CHECK(count_label(split.test, "small") == 10);
}

TEST_CASE("tiny classes still get non-empty parts under positive ratios") {
  std::vector<LabeledParagraph> data = uniform_class("a", 5);
  std::vector<LabeledParagraph> b = uniform_class("b", 9);
  data.insert(data.end(), b.begin(), b.end());
  Split split = balanced_split(data, SplitRatios{0.8, 0.1, 0.1}, 1);
  CHECK(split.per_class.train == 3);
  CHECK(split.per_class.valid == 1);
  CHECK(split.per_class.test == 1);

  // a zero ratio legitimately means an empty part
  Split no_valid = balanced_split(data, SplitRatios{0.8, 0.0, 0.2}, 1);
  CHECK(no_valid.valid.empty());
  CHECK(no_valid.per_class.test == 1);

  std::vector<LabeledParagraph> starved = uniform_class("a", 2);
  std::vector<LabeledParagraph> b2 = uniform_class("b", 50);
  starved.insert(starved.end(), b2.begin(), b2.end());
  CHECK_THROWS_WITH_AS(balanced_split(starved, SplitRatios{0.8, 0.1, 0.1}, 1),
                       doctest::Contains("'a'"), DataError);
}

TEST_CASE("insufficient explicit counts name the short class") {
  std::vector<LabeledParagraph> data = uniform_class("legal", 571);
  std::vector<LabeledParagraph> illegal = uniform_class("illegal", 500);
  data.insert(data.end(), illegal.begin(), illegal.end());
  CHECK_THROWS_WITH_AS(balanced_split(data, SplitCounts{456, 57, 58}, 1),
                       doctest::Contains("'illegal'"), DataError);
  CHECK_THROWS_AS(balanced_split({}, SplitCounts{1, 0, 0}, 1), DataError);
  CHECK_THROWS_AS(balanced_split(data, SplitCounts{0, 0, 0}, 1), DataError);
}

TEST_CASE("site-disjoint splits never share a site across parts") {
  // 6 sites x 5 paragraphs per class
  std::vector<LabeledParagraph> data = uniform_class("legal", 30, 6);
  std::vector<LabeledParagraph> illegal = uniform_class("illegal", 30, 6);
  data.insert(data.end(), illegal.begin(), illegal.end());

  Split split = balanced_split(data, SplitCounts{12, 5, 5}, 7, true);
  CHECK(count_label(split.train, "legal") == 12);
  CHECK(count_label(split.test, "illegal") == 5);
  auto sites_of = [](std::span<const LabeledParagraph> part) {
    std::set<std::string> sites;
    for (const auto& ex : part) sites.insert(ex.site_id);
    return sites;
  };
  std::set<std::string> train_sites = sites_of(split.train);
  for (const std::string& s : sites_of(split.valid))
    CHECK(train_sites.count(s) == 0);
  for (const std::string& s : sites_of(split.test)) {
    CHECK(train_sites.count(s) == 0);
    CHECK(sites_of(split.valid).count(s) == 0);
  }

  // a single giant site per class cannot be split site-disjointly
  std::vector<LabeledParagraph> one_site = uniform_class("legal", 30, 1);
  std::vector<LabeledParagraph> one_site_b = uniform_class("illegal", 30, 1);
  one_site.insert(one_site.end(), one_site_b.begin(), one_site_b.end());
  CHECK_THROWS_WITH_AS(balanced_split(one_site, SplitCounts{12, 5, 5}, 7, true),
                       doctest::Contains("site-disjoint"), DataError);
}

TEST_CASE("accuracy is the exact match fraction") {
  using V = std::vector<std::string>;
  V gold = {"A", "B"};
  CHECK(accuracy(V{"A", "B"}, gold) == 1.0);
  CHECK(accuracy(V{"A", "A"}, gold) == 0.5);

  V gold58, pred58;
  for (int i = 0; i < 58; ++i) {
    gold58.push_back("A");
    pred58.push_back(i < 41 ? "A" : "B");
  }
  CHECK(accuracy(pred58, gold58) == doctest::Approx(41.0 / 58.0));

  CHECK_THROWS_AS(accuracy(V{"A"}, gold), DataError);
  CHECK_THROWS_AS(accuracy(V{}, V{}), DataError);
}

TEST_CASE("swapping binary gold labels flips accuracy") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> gold, pred;
    for (int i = 0; i < 20; ++i) {
      gold.push_back(i < 10 ? "x" : "y");  // balanced
      pred.push_back(rng.below(2) ? "x" : "y");
    }
    std::vector<std::string> swapped;
    for (const std::string& g : gold) swapped.push_back(g == "x" ? "y" : "x");
    CHECK(accuracy(pred, gold) ==
          doctest::Approx(1.0 - accuracy(pred, swapped)));
  }
}

TEST_CASE("NB on disjoint-lexicon data is perfectly accurate") {
  Split split = balanced_split(separable_data(), SplitRatios{}, 3);
  ExperimentConfig config;
  config.classifier = ClassifierKind::NaiveBayes;
  config.manipulation = Manipulation::Full;
  ExperimentReport report = run_experiment(config, split);
  CHECK(report.accuracy == 1.0);
  CHECK(report.config.setting == "full");
  size_t total = report.confusion[0][0] + report.confusion[0][1] +
                 report.confusion[1][0] + report.confusion[1][1];
  CHECK(total == split.test.size());
  CHECK(report.predictions.size() == split.test.size());
}

TEST_CASE("majority dummy scores exactly one half on a balanced test") {
  Split split = balanced_split(separable_data(), SplitRatios{}, 3);
  ExperimentConfig config;
  config.classifier = ClassifierKind::Majority;
  ExperimentReport report = run_experiment(config, split);
  CHECK(report.accuracy == 0.5);
  // one confusion row is all hits, the other all misses
  CHECK(report.confusion[0][0] + report.confusion[1][0] == split.test.size());
}

TEST_CASE("the audit trail pins one manipulation across all three parts") {
  Split split = balanced_split(separable_data(), SplitRatios{}, 3);
  ExperimentConfig config;
  config.manipulation = Manipulation::DropFunction;
  ExperimentReport report = run_experiment(config, split);
  REQUIRE(report.audit.size() == 3);
  CHECK(report.audit[0].rfind("train:", 0) == 0);
  CHECK(report.audit[1].rfind("valid:", 0) == 0);
  CHECK(report.audit[2].rfind("test:", 0) == 0);
  for (const std::string& line : report.audit)
    CHECK(line.find("drop-func") != std::string::npos);
}

TEST_CASE("run_experiment is deterministic for every classifier") {
  std::vector<LabeledParagraph> data = separable_data();
  Split split = balanced_split(data, SplitRatios{}, 3);

  std::set<std::string> words;
  for (const auto& ex : data)
    for (const Token& t : ex.paragraph.tokens) words.insert(t.surface);
  std::vector<std::pair<std::string, std::vector<double>>> vecs;
  Rng rng(77);
  for (const std::string& w : words) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    vecs.emplace_back(w, v);
  }
  EmbeddingTable emb = EmbeddingTable::from_vectors(vecs, 77);

  for (ClassifierKind kind : kAllClassifiers) {
    CAPTURE(to_string(kind));
    ExperimentConfig config;
    config.classifier = kind;
    config.boe.epochs = 8;
    config.boe.hidden_dim = 6;
    ExperimentReport a = run_experiment(config, split, &emb);
    ExperimentReport b = run_experiment(config, split, &emb);
    CHECK(a.accuracy == b.accuracy);
    REQUIRE(a.predictions.size() == b.predictions.size());
    for (size_t i = 0; i < a.predictions.size(); ++i) {
      CHECK(a.predictions[i].predicted == b.predictions[i].predicted);
      CHECK(a.predictions[i].score == b.predictions[i].score);
    }
  }

  ExperimentConfig boe_no_table;
  boe_no_table.classifier = ClassifierKind::BoeSum;
  CHECK_THROWS_AS(run_experiment(boe_no_table, split), ConfigError);
}

TEST_CASE("grid runs every cell and renders the accuracy table") {
  std::vector<LabeledParagraph> data = separable_data(60);
  Split split = balanced_split(data, SplitRatios{}, 13);

  std::set<std::string> words;
  for (const auto& ex : data)
    for (const Token& t : ex.paragraph.tokens) words.insert(t.surface);
  std::vector<std::pair<std::string, std::vector<double>>> vecs;
  Rng rng(7);
  for (const std::string& w : words) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    vecs.emplace_back(w, v);
  }
  EmbeddingTable emb = EmbeddingTable::from_vectors(vecs, 7);

  GridSpec grid;
  grid.classifiers = {ClassifierKind::NaiveBayes, ClassifierKind::Svm,
                      ClassifierKind::BoeSum, ClassifierKind::BoeAvg};
  grid.manipulations.assign(std::begin(kAllManipulations),
                            std::end(kAllManipulations));
  grid.base.boe.epochs = 6;
  grid.base.boe.hidden_dim = 6;
  grid.seed = 2026;

  std::vector<ExperimentReport> reports = run_grid(grid, split, &emb);
  REQUIRE(reports.size() == 20);
  // classifier-major order with per-cell derived seeds
  CHECK(reports[0].config.classifier == ClassifierKind::NaiveBayes);
  CHECK(reports[0].config.manipulation == Manipulation::Full);
  CHECK(reports[5].config.classifier == ClassifierKind::Svm);
  std::set<uint64_t> seeds;
  for (const auto& r : reports) seeds.insert(r.config.seed);
  CHECK(seeds.size() == 20);

  // more workers, identical results
  GridSpec parallel = grid;
  parallel.workers = 4;
  std::vector<ExperimentReport> again = run_grid(parallel, split, &emb);
  REQUIRE(again.size() == 20);
  for (size_t i = 0; i < 20; ++i) {
    CHECK(again[i].accuracy == reports[i].accuracy);
    CHECK(again[i].config.seed == reports[i].config.seed);
    for (size_t p = 0; p < reports[i].predictions.size(); ++p)
      CHECK(again[i].predictions[p].score == reports[i].predictions[p].score);
  }

  std::string table = grid_markdown(reports);
  CHECK(table.find("| classifier |") == 0);
  CHECK(table.find(" full |") != std::string::npos);
  CHECK(table.find(" pos-func |") != std::string::npos);
  CHECK(table.find("| nb |") != std::string::npos);
  CHECK(table.find("| boe-avg |") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 6);  // header + rule + 4
}

TEST_CASE("degenerate transfer equals the in-domain experiment") {
  Split split = balanced_split(separable_data(), SplitRatios{}, 3);
  ExperimentConfig config;
  config.classifier = ClassifierKind::NaiveBayes;
  ExperimentReport in_domain = run_experiment(config, split);
  ExperimentReport transfer = cross_domain(config, split, split);
  CHECK(transfer.accuracy == in_domain.accuracy);
  REQUIRE(transfer.predictions.size() == in_domain.predictions.size());
  for (size_t i = 0; i < transfer.predictions.size(); ++i)
    CHECK(transfer.predictions[i].predicted ==
          in_domain.predictions[i].predicted);
}

TEST_CASE("shared legality markers carry NB drop-func across topics") {
  SyntheticSpec spec;
  spec.lexicon_size_per_tag = 12;
  spec.length_min = 40;
  spec.length_max = 60;
  spec.marker_rate = 0.15;
  spec.marker_words = 6;
  SyntheticDomain d;
  d.legality = Legality::Illegal;
  d.pos_profile = {{Upos::NOUN, 0.45}, {Upos::VERB, 0.15}, {Upos::DET, 0.25},
                   {Upos::ADP, 0.15}};
  d.paragraphs = 120;
  d.sites = 6;

  d.name = "drugs-ill";
  d.topic = "pill";
  SyntheticDomain drugs_ill = d;
  d.name = "drugs-leg";
  d.legality = Legality::Legal;
  SyntheticDomain drugs_leg = d;
  d.name = "forums-leg";
  d.topic = "chat";
  SyntheticDomain forums_leg = d;
  d.name = "forums-ill";
  d.legality = Legality::Illegal;
  SyntheticDomain forums_ill = d;
  spec.domains = {drugs_ill, drugs_leg, forums_leg, forums_ill};

  SyntheticResult result = generate_synthetic_corpus(spec, 4242);
  std::vector<LabeledParagraph> drugs = labeled_examples(result.domains[0]);
  std::vector<LabeledParagraph> more = labeled_examples(result.domains[1]);
  drugs.insert(drugs.end(), more.begin(), more.end());
  std::vector<LabeledParagraph> forums = labeled_examples(result.domains[2]);
  more = labeled_examples(result.domains[3]);
  forums.insert(forums.end(), more.begin(), more.end());

  Split source = balanced_split(drugs, SplitRatios{}, 1);
  Split target = balanced_split(forums, SplitRatios{}, 2);

  ExperimentConfig config;
  config.classifier = ClassifierKind::NaiveBayes;
  config.manipulation = Manipulation::DropFunction;
  config.train_domain = "drugs";
  config.test_domain = "forums";
  ExperimentReport report = cross_domain(config, source, target);
  CHECK(report.accuracy > 0.9);

  // breaking the label scheme must be loud
  std::vector<LabeledParagraph> renamed = forums;
  for (auto& ex : renamed) ex.label = ex.label == "legal" ? "fine" : "bad";
  Split bad_target = balanced_split(renamed, SplitRatios{}, 2);
  CHECK_THROWS_WITH_AS(cross_domain(config, source, bad_target),
                       doctest::Contains("label scheme"), DataError);
}

TEST_CASE("report JSON excludes wall clock and round-trips predictions") {
  testutil::TempDir dir;
  Split split = balanced_split(separable_data(), SplitRatios{}, 3);
  ExperimentConfig config;
  config.train_domain = "onion";
  config.test_domain = "onion";
  ExperimentReport report = run_experiment(config, split);
  CHECK(report.wall_seconds >= 0.0);

  nlohmann::json j = to_json(report);
  CHECK(j.dump().find("wall") == std::string::npos);
  CHECK(j["accuracy"] == 1.0);
  CHECK(j["config"]["classifier"] == "nb");
  CHECK(j["config"]["manipulation"] == "full");
  CHECK(j["predictions"].size() == report.predictions.size());
  size_t confusion_total = 0;
  for (const auto& row : j["confusion"])
    for (const auto& cell : row) confusion_total += cell.get<size_t>();
  CHECK(confusion_total == split.test.size());

  write_predictions_jsonl(report, dir.file("pred.jsonl"));
  std::string body = testutil::read_file(dir.file("pred.jsonl"));
  size_t lines = std::count(body.begin(), body.end(), '\n');
  CHECK(lines == report.predictions.size());
  std::istringstream in(body);
  std::string line;
  REQUIRE(std::getline(in, line));
  nlohmann::json first = nlohmann::json::parse(line);
  CHECK(first["paragraph_id"] == report.predictions[0].paragraph_id);
  CHECK(first["gold"] == report.predictions[0].gold);
}
