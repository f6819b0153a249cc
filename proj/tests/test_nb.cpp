#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "corpex/errors.hpp"
#include "corpex/naive_bayes.hpp"
#include "corpex/rng.hpp"
#include "helpers.hpp"

using namespace corpex;

namespace {

LabeledParagraph example(const std::string& id, const std::string& text,
                         const std::string& label) {
  return {TaggedParagraph{id, tokenize(text)}, label, "site"};
}

TaggedParagraph doc(const std::string& text) {
  return {"t", tokenize(text)};
}

// Exhaustive Bayes-rule evaluation, sharing nothing with the implementation:
// document frequencies via std::set, vocabulary iterated in sorted order,
// log(1-theta) instead of log1p.
std::array<double, 2> oracle_log_joint(
    std::span<const LabeledParagraph> train, double alpha,
    const std::array<std::string, 2>& classes, const TaggedParagraph& test) {
  std::set<std::string> vocab;
  for (const auto& ex : train)
    for (const auto& t : ex.paragraph.tokens) vocab.insert(t.surface);

  std::array<double, 2> n{0.0, 0.0};
  std::map<std::string, std::array<double, 2>> docfreq;
  for (const auto& ex : train) {
    int c = ex.label == classes[0] ? 0 : 1;
    n[c] += 1.0;
    std::set<std::string> seen;
    for (const auto& t : ex.paragraph.tokens) seen.insert(t.surface);
    for (const auto& w : seen) docfreq[w][c] += 1.0;
  }

  std::set<std::string> present;
  for (const auto& t : test.tokens)
    if (vocab.count(t.surface)) present.insert(t.surface);

  std::array<double, 2> lj{};
  for (int c = 0; c < 2; ++c) {
    lj[c] = std::log(n[c] / (n[0] + n[1]));
    for (const auto& w : vocab) {
      double theta = (docfreq[w][c] + alpha) / (n[c] + 2.0 * alpha);
      lj[c] += std::log(present.count(w) ? theta : 1.0 - theta);
    }
  }
  return lj;
}

}  // namespace

TEST_CASE("smoothing formula on the two-document fixture") {
  std::vector<LabeledParagraph> train = {example("1", "x y", "A"),
                                         example("2", "z", "B")};
  NbModel model = train_nb(train, 1.0);
  REQUIRE(model.classes == std::array<std::string, 2>{"A", "B"});
  auto ix = model.vocab.index("x");
  REQUIRE(ix.has_value());
  // theta_{A,x} = (1 + 1) / (1 + 2) = 2/3
  CHECK(model.log_theta[0][*ix] == doctest::Approx(std::log(2.0 / 3.0)));
  CHECK(model.log_one_minus[0][*ix] == doctest::Approx(std::log(1.0 / 3.0)));
  // priors 1/2 each
  CHECK(model.log_prior[0] == doctest::Approx(std::log(0.5)));
  CHECK(model.log_prior[1] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("huge alpha drives every theta to one half") {
  std::vector<LabeledParagraph> train = {example("1", "x x y", "A"),
                                         example("2", "z", "B")};
  NbModel model = train_nb(train, 1e12);
  for (int c = 0; c < 2; ++c)
    for (double lt : model.log_theta[c])
      CHECK(std::exp(lt) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("training document is recovered on a separable fixture") {
  std::vector<LabeledParagraph> train = {example("1", "buy pills now", "illegal"),
                                         example("2", "cute cat pictures", "legal")};
  NbModel model = train_nb(train);
  CHECK(predict_nb(model, train[0].paragraph).label == "illegal");
  CHECK(predict_nb(model, train[1].paragraph).label == "legal");
}

TEST_CASE("posteriors match the brute-force oracle on random corpora") {
  Rng rng(20260814);
  const char* letters = "abcdefghijklmnopqrst";
  for (int trial = 0; trial < 60; ++trial) {
    size_t n_docs = 2 + rng.below(9);          // 2..10
    size_t vocab_size = 1 + rng.below(20);     // 1..20
    double alpha = trial % 3 == 0 ? 0.5 : 1.0;
    auto word = [&](size_t k) { return std::string("w") + letters[k]; };

    std::vector<LabeledParagraph> train;
    for (size_t d = 0; d < n_docs; ++d) {
      std::string text;
      size_t len = rng.below(9);
      for (size_t i = 0; i < len; ++i) {
        if (i) text += ' ';
        text += word(rng.below(vocab_size));
      }
      // first two documents pin one class each so both always appear
      std::string label = d == 0 ? "alpha"
                        : d == 1 ? "beta"
                                 : (rng.below(2) ? "alpha" : "beta");
      train.push_back(example(std::to_string(d), text, label));
    }
    NbModel model = train_nb(train, alpha);
    REQUIRE(model.classes == std::array<std::string, 2>{"alpha", "beta"});

    for (int t = 0; t < 3; ++t) {
      std::string text;
      size_t len = rng.below(9);
      for (size_t i = 0; i < len; ++i) {
        if (i) text += ' ';
        // mix in out-of-vocabulary words, which must be ignored
        text += rng.below(5) == 0 ? "zoov" : word(rng.below(vocab_size));
      }
      TaggedParagraph test = doc(text);
      auto expect = oracle_log_joint(train, alpha, model.classes, test);
      NbPrediction got = predict_nb(model, test);
      CHECK(std::abs(got.log_joint[0] - expect[0]) < 1e-9);
      CHECK(std::abs(got.log_joint[1] - expect[1]) < 1e-9);
      // near-exact ties can order either way inside the 1e-9 agreement band
      if (std::abs(expect[0] - expect[1]) > 1e-9) {
        std::string want = expect[0] > expect[1] ? "alpha" : "beta";
        CHECK(got.label == want);
      }
      double lse = std::max(expect[0], expect[1]) +
                   std::log(std::exp(expect[0] - std::max(expect[0], expect[1])) +
                            std::exp(expect[1] - std::max(expect[0], expect[1])));
      CHECK(std::abs(got.log_posterior[0] - (expect[0] - lse)) < 1e-9);
      CHECK(std::abs(std::exp(got.log_posterior[0]) +
                     std::exp(got.log_posterior[1]) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("empty paragraph falls back to prior plus all-absent likelihood") {
  std::vector<LabeledParagraph> train = {example("1", "x", "A"),
                                         example("2", "x", "A"),
                                         example("3", "y", "B")};
  NbModel model = train_nb(train);
  TaggedParagraph empty{"e", {}};
  auto expect = oracle_log_joint(train, 1.0, model.classes, empty);
  NbPrediction got = predict_nb(model, empty);
  CHECK(std::abs(got.log_joint[0] - expect[0]) < 1e-9);
  CHECK(std::abs(got.log_joint[1] - expect[1]) < 1e-9);
  CHECK(got.label == "A");  // hand check: priors 2/3 vs 1/3 dominate
}

TEST_CASE("out-of-vocabulary words change nothing") {
  std::vector<LabeledParagraph> train = {example("1", "x y", "A"),
                                         example("2", "z", "B")};
  NbModel model = train_nb(train);
  NbPrediction empty = predict_nb(model, doc(""));
  NbPrediction oov = predict_nb(model, doc("unseen words only"));
  CHECK(oov.log_joint == empty.log_joint);
  CHECK(oov.label == empty.label);
}

TEST_CASE("exact ties go to the first-seen class") {
  std::vector<LabeledParagraph> train = {example("1", "x", "A"),
                                         example("2", "y", "B")};
  NbModel model = train_nb(train);
  NbPrediction p = predict_nb(model, doc("x y"));
  CHECK(p.log_joint[0] == doctest::Approx(p.log_joint[1]));
  CHECK(p.label == "A");
}

TEST_CASE("token repetition is invisible to presence features") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledParagraph> train = {
        example("1", "spam offer cheap", "bad"),
        example("2", "meeting notes agenda", "good"),
        example("3", "cheap offer", "bad"),
        example("4", "weekly agenda", "good")};
    // duplicate random tokens inside random training documents
    std::vector<LabeledParagraph> noisy = train;
    for (int k = 0; k < 5; ++k) {
      auto& tokens = noisy[rng.below(noisy.size())].paragraph.tokens;
      if (tokens.empty()) continue;
      tokens.push_back(tokens[rng.below(tokens.size())]);
    }
    NbModel a = train_nb(train);
    NbModel b = train_nb(noisy);
    TaggedParagraph test = doc("cheap agenda offer");
    TaggedParagraph test_rep = doc("cheap cheap agenda offer offer offer");
    CHECK(predict_nb(a, test).log_joint == predict_nb(b, test).log_joint);
    CHECK(predict_nb(a, test).log_joint == predict_nb(a, test_rep).log_joint);
  }
}

// Folk wisdom says adding one document to *both* classes cannot move the
// decision boundary.  It can: the per-class document frequencies differ, so
// the smoothed ratios (df+a)/(N+2a) shift by different amounts.  This pins
// the actual behavior so nobody "fixes" it into silent renormalization.
TEST_CASE("duplicating a document into both classes may flip a decision") {
  std::vector<LabeledParagraph> train = {
      example("a1", "u", "A"),      example("a2", "u p", "A"),
      example("a3", "u p qa", "A"), example("a4", "p qb", "A"),
      example("b1", "", "B"),       example("b2", "", "B"),
      example("b3", "", "B"),       example("b4", "", "B")};
  NbModel before = train_nb(train, 1.0);
  CHECK(predict_nb(before, doc("u")).label == "A");

  std::vector<LabeledParagraph> doubled = train;
  doubled.push_back(example("a5", "u", "A"));
  doubled.push_back(example("b5", "u", "B"));
  NbModel after = train_nb(doubled, 1.0);
  CHECK(predict_nb(after, doc("u")).label == "B");

  // both runs agree with the oracle, so the flip is the formula's doing
  auto lj = oracle_log_joint(doubled, 1.0, after.classes, doc("u"));
  CHECK(std::abs(predict_nb(after, doc("u")).log_joint[0] - lj[0]) < 1e-9);
  CHECK(lj[1] > lj[0]);
}

TEST_CASE("invalid training inputs are rejected") {
  std::vector<LabeledParagraph> one_class = {example("1", "x", "A"),
                                             example("2", "y", "A")};
  CHECK_THROWS_AS(train_nb(one_class), DataError);

  std::vector<LabeledParagraph> three = {example("1", "x", "A"),
                                         example("2", "y", "B"),
                                         example("3", "z", "C")};
  CHECK_THROWS_AS(train_nb(three), DataError);

  std::vector<LabeledParagraph> ok = {example("1", "x", "A"),
                                      example("2", "y", "B")};
  CHECK_THROWS_AS(train_nb(ok, 0.0), ConfigError);
  CHECK_THROWS_AS(train_nb(ok, -1.0), ConfigError);
  CHECK_THROWS_AS(train_nb({}), DataError);
}

TEST_CASE("model round-trips through JSON with identical predictions") {
  testutil::TempDir dir;
  std::vector<LabeledParagraph> train = {example("1", "buy pills now", "illegal"),
                                         example("2", "cute cat pictures", "legal"),
                                         example("3", "pills cheap", "illegal"),
                                         example("4", "cat videos", "legal")};
  NbModel model = train_nb(train, 0.7);
  save_model(model, dir.file("nb.json"));
  NbModel loaded = load_nb_model(dir.file("nb.json"));

  CHECK(loaded.classes == model.classes);
  CHECK(loaded.alpha == model.alpha);
  CHECK(loaded.vocab.size() == model.vocab.size());
  for (const auto& text : {"pills", "cat", "cheap videos", ""}) {
    NbPrediction a = predict_nb(model, doc(text));
    NbPrediction b = predict_nb(loaded, doc(text));
    CHECK(a.label == b.label);
    CHECK(a.log_joint == b.log_joint);  // full-precision floats survive
  }
}

TEST_CASE("model loader rejects foreign and future files") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("bad.json"), "{\"model\": \"nb\", \"format_version\": 99}");
  CHECK_THROWS_AS(load_nb_model(dir.file("bad.json")), DataError);
  testutil::write_file(dir.file("other.json"), "{\"model\": \"svm\", \"format_version\": 1}");
  CHECK_THROWS_AS(load_nb_model(dir.file("other.json")), DataError);
  testutil::write_file(dir.file("junk.json"), "not json at all");
  CHECK_THROWS_AS(load_nb_model(dir.file("junk.json")), DataError);
  CHECK_THROWS_AS(load_nb_model(dir.file("missing.json")), DataError);
}
