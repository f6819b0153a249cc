#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"
#include "corpex/svm.hpp"
#include "helpers.hpp"

using namespace corpex;

namespace {

// Builds a paragraph whose count-BoW vector is exactly `counts` over the
// words aa, bb, cc, ... (one letter pair per feature).
std::string counts_text(const std::vector<int>& counts) {
  std::string text;
  for (size_t f = 0; f < counts.size(); ++f) {
    std::string word(2, static_cast<char>('a' + f));
    for (int k = 0; k < counts[f]; ++k) {
      if (!text.empty()) text += ' ';
      text += word;
    }
  }
  return text;
}

LabeledParagraph point(const std::string& id, const std::vector<int>& counts,
                       const std::string& label) {
  return {TaggedParagraph{id, tokenize(counts_text(counts))}, label, "site"};
}

// Guarantees every feature enters the vocabulary even when a point has
// count zero there: a dummy paragraph mentioning each word once per class
// would distort training, so instead the fixtures below always give the
// first point of each class a positive count in every dimension.

// Reference solver for the dual
//   max  sum(a) - 1/2 a^T (yy^T . K) a   s.t.  0 <= a <= C,  y^T a = 0
// by projected gradient ascent.  The projection onto box-and-hyperplane is
// exact: alpha(l) = clip(v - l*y, 0, C) with l found by bisection (the
// constraint residual is monotone in l).  Nothing here is shared with the
// SMO code path.
struct QpSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;
  size_t free_count = 0;
};

QpSolution solve_reference_qp(const std::vector<SparseVector>& x,
                              const std::vector<double>& y, double c,
                              double gamma) {
  const size_t n = x.size();
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) k[i][j] = rbf_kernel(x[i], x[j], gamma);

  auto project = [&](const std::vector<double>& v) {
    double bound = c + 1.0;
    for (double vi : v) bound = std::max(bound, std::abs(vi) + c + 1.0);
    double lo = -bound, hi = bound;
    auto residual = [&](double l) {
      double r = 0.0;
      for (size_t i = 0; i < n; ++i)
        r += y[i] * std::clamp(v[i] - l * y[i], 0.0, c);
      return r;  // non-increasing in l
    };
    for (int step = 0; step < 200; ++step) {
      double mid = 0.5 * (lo + hi);
      (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    double l = 0.5 * (lo + hi);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = std::clamp(v[i] - l * y[i], 0.0, c);
    return out;
  };

  std::vector<double> a(n, 0.0);
  // Lipschitz constant of the gradient <= trace(K) = n for an RBF kernel.
  double step = 1.0 / static_cast<double>(n);
  for (long it = 0; it < 300000; ++it) {
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) {
      double qa = 0.0;
      for (size_t j = 0; j < n; ++j) qa += y[j] * a[j] * k[i][j];
      v[i] = a[i] + step * (1.0 - y[i] * qa);
    }
    std::vector<double> next = project(v);
    double move = 0.0;
    for (size_t i = 0; i < n; ++i) move = std::max(move, std::abs(next[i] - a[i]));
    a = std::move(next);
    if (move < 1e-13 && it > 100) break;
  }

  QpSolution sol;
  sol.alpha = a;
  double lin = 0.0, quad = 0.0;
  for (size_t i = 0; i < n; ++i) {
    lin += a[i];
    for (size_t j = 0; j < n; ++j) quad += a[i] * a[j] * y[i] * y[j] * k[i][j];
  }
  sol.objective = lin - 0.5 * quad;
  double bias_sum = 0.0;
  for (size_t t = 0; t < n; ++t) {
    if (a[t] > 1e-6 && a[t] < c - 1e-6) {
      double f = 0.0;
      for (size_t s = 0; s < n; ++s) f += a[s] * y[s] * k[s][t];
      bias_sum += y[t] - f;
      ++sol.free_count;
    }
  }
  if (sol.free_count > 0) sol.bias = bias_sum / static_cast<double>(sol.free_count);
  return sol;
}

double oracle_decision(const QpSolution& sol, const std::vector<SparseVector>& x,
                       const std::vector<double>& y, double gamma,
                       const SparseVector& probe) {
  double f = sol.bias;
  for (size_t s = 0; s < x.size(); ++s)
    f += sol.alpha[s] * y[s] * rbf_kernel(x[s], probe, gamma);
  return f;
}

std::vector<LabeledParagraph> separated_clouds() {
  std::vector<LabeledParagraph> train;
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    std::vector<int> hi = {7 + static_cast<int>(rng.below(3)),
                           static_cast<int>(rng.below(2)) + (i == 0 ? 1 : 0)};
    train.push_back(point("p" + std::to_string(i), hi, "pos"));
  }
  for (int i = 0; i < 10; ++i) {
    std::vector<int> lo = {static_cast<int>(rng.below(2)) + (i == 0 ? 1 : 0),
                           7 + static_cast<int>(rng.below(3))};
    train.push_back(point("n" + std::to_string(i), lo, "neg"));
  }
  return train;
}

std::vector<LabeledParagraph> overlapping_clouds() {
  std::vector<LabeledParagraph> train;
  Rng rng(23);
  for (int i = 0; i < 15; ++i) {
    std::vector<int> v = {static_cast<int>(rng.below(4)) + 2,
                          static_cast<int>(rng.below(5)),
                          static_cast<int>(rng.below(3)) + (i == 0 ? 1 : 0)};
    train.push_back(point("p" + std::to_string(i), v, "pos"));
  }
  for (int i = 0; i < 15; ++i) {
    std::vector<int> v = {static_cast<int>(rng.below(5)),
                          static_cast<int>(rng.below(4)) + 2,
                          static_cast<int>(rng.below(3)) + (i == 0 ? 1 : 0)};
    train.push_back(point("n" + std::to_string(i), v, "neg"));
  }
  return train;
}

// Features exactly as training builds them, for probing decision values.
std::vector<SparseVector> features_of(const std::vector<LabeledParagraph>& train,
                                      const Vocabulary& vocab) {
  std::vector<SparseVector> rows;
  for (const auto& ex : train) rows.push_back(count_bow(ex.paragraph, vocab));
  return rows;
}

std::vector<double> signs_of(const std::vector<LabeledParagraph>& train,
                             const std::string& positive) {
  std::vector<double> y;
  for (const auto& ex : train) y.push_back(ex.label == positive ? 1.0 : -1.0);
  return y;
}

}  // namespace

TEST_CASE("rbf kernel is one at zero distance and falls with distance") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    SparseVector v;
    for (uint32_t i = 0; i < 6; ++i)
      if (rng.below(2)) v.entries.emplace_back(i, static_cast<double>(rng.below(9)));
    CHECK(rbf_kernel(v, v, 0.7) == 1.0);
  }
  SparseVector a{{{0, 1.0}}}, b{{{0, 2.0}}};
  CHECK(rbf_kernel(a, b, 2.0) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("gamma scale matches the 1/(V*var) formula") {
  // entries {2,0,2,0} / {0,2,0,2}: mean 1, variance 1, V = 4 -> gamma 0.25
  std::vector<LabeledParagraph> train = {point("1", {2, 0, 2, 0}, "A"),
                                         point("2", {0, 2, 0, 2}, "B")};
  SvmModel model = train_svm(train);
  CHECK(model.gamma == doctest::Approx(0.25));

  Vocabulary vocab = Vocabulary::build(train);
  CHECK(gamma_scale(features_of(train, vocab), vocab.size()) ==
        doctest::Approx(0.25));

  // a constant matrix has zero variance; the library convention is gamma 1
  std::vector<SparseVector> constant = {{{{0, 3.0}, {1, 3.0}}},
                                        {{{0, 3.0}, {1, 3.0}}}};
  CHECK(gamma_scale(constant, 2) == 1.0);
}

TEST_CASE("well-separated clouds train to 100% accuracy") {
  std::vector<LabeledParagraph> train = separated_clouds();
  SvmModel model = train_svm(train);
  for (const auto& ex : train)
    CHECK(predict_svm(model, ex.paragraph).label == ex.label);
  CHECK(model.final_violation <= 1e-5);
  CHECK_FALSE(model.support_vectors.empty());
}

TEST_CASE("solution satisfies the KKT conditions and the equality constraint") {
  for (bool overlap : {false, true}) {
    CAPTURE(overlap);
    std::vector<LabeledParagraph> train =
        overlap ? overlapping_clouds() : separated_clouds();
    SvmConfig config;
    config.tol = 1e-6;
    SvmModel model = train_svm(train, config);

    double alpha_dot_y = 0.0;
    for (double coef : model.dual_coef) alpha_dot_y += coef;
    CHECK(std::abs(alpha_dot_y) <= 1e-8);

    // stored vectors all have alpha > 0; separate free from bounded
    for (size_t s = 0; s < model.support_vectors.size(); ++s) {
      double alpha = std::abs(model.dual_coef[s]);
      double ysv = model.dual_coef[s] > 0 ? 1.0 : -1.0;
      double margin = ysv * decision_value(model, model.support_vectors[s]);
      if (alpha < model.c - 1e-9) {
        CHECK(margin == doctest::Approx(1.0).epsilon(1e-4));
      } else {
        CHECK(margin <= 1.0 + 1e-4);
      }
    }

    // zero-alpha training points must sit on or outside the margin
    std::vector<double> y = signs_of(train, model.classes[0]);
    std::vector<SparseVector> rows = features_of(train, model.vocab);
    for (size_t t = 0; t < rows.size(); ++t) {
      bool is_sv = false;
      for (const auto& sv : model.support_vectors)
        if (sv == rows[t]) is_sv = true;
      if (!is_sv) CHECK(y[t] * decision_value(model, rows[t]) >= 1.0 - 1e-4);
    }
  }
}

TEST_CASE("dual objective never decreases across working-pair updates") {
  SvmConfig config;
  config.record_objective = true;
  config.tol = 1e-6;
  SvmModel model = train_svm(overlapping_clouds(), config);
  REQUIRE(model.objective_trace.size() > 3);
  CHECK(model.objective_trace.front() >= 0.0);  // starts from objective 0
  for (size_t i = 1; i < model.objective_trace.size(); ++i) {
    CHECK(model.objective_trace[i] >=
          model.objective_trace[i - 1] - 1e-9);
  }
}

TEST_CASE("SMO agrees with a projected-gradient reference solver") {
  for (bool overlap : {false, true}) {
    CAPTURE(overlap);
    std::vector<LabeledParagraph> train =
        overlap ? overlapping_clouds() : separated_clouds();
    SvmConfig config;
    config.gamma = SvmGamma::fixed(0.1);
    config.tol = 1e-8;
    config.record_objective = true;
    SvmModel model = train_svm(train, config);

    std::vector<SparseVector> rows = features_of(train, model.vocab);
    std::vector<double> y = signs_of(train, model.classes[0]);
    QpSolution reference = solve_reference_qp(rows, y, config.c, 0.1);
    REQUIRE(reference.free_count > 0);

    CHECK(model.objective_trace.back() ==
          doctest::Approx(reference.objective).epsilon(1e-6));
    CHECK(model.bias == doctest::Approx(reference.bias).epsilon(1e-3));

    // the decision surface is unique even where the duals are not
    for (const SparseVector& probe : rows) {
      double want = oracle_decision(reference, rows, y, 0.1, probe);
      CHECK(decision_value(model, probe) == doctest::Approx(want).epsilon(1e-4));
    }
    for (const std::vector<int>& extra :
         {std::vector<int>{4, 4, 1}, {1, 0, 2}, {9, 9, 9}}) {
      std::vector<int> padded = extra;
      padded.resize(model.vocab.size(), 0);
      SparseVector probe;
      for (uint32_t f = 0; f < padded.size(); ++f)
        if (padded[f]) probe.entries.emplace_back(f, double(padded[f]));
      double want = oracle_decision(reference, rows, y, 0.1, probe);
      CHECK(decision_value(model, probe) == doctest::Approx(want).epsilon(1e-4));
    }
  }
}

TEST_CASE("decision values are invariant to training-order permutation") {
  std::vector<LabeledParagraph> train = overlapping_clouds();
  SvmConfig config;
  config.tol = 1e-8;
  SvmModel a = train_svm(train, config);

  std::vector<LabeledParagraph> shuffled = train;
  Rng rng(99);
  rng.shuffle(shuffled);
  // keep the first-seen class order, and thus the sign convention, stable
  if (shuffled.front().label != train.front().label) {
    for (size_t i = 0; i < shuffled.size(); ++i) {
      if (shuffled[i].label == train.front().label) {
        std::swap(shuffled[0], shuffled[i]);
        break;
      }
    }
  }
  SvmModel b = train_svm(shuffled, config);
  CHECK(a.classes == b.classes);
  for (const auto& ex : train) {
    double da = predict_svm(a, ex.paragraph).decision;
    double db = predict_svm(b, ex.paragraph).decision;
    CHECK(da == doctest::Approx(db).epsilon(1e-6));
  }
}

TEST_CASE("a probe far from every support vector decays to the bias") {
  SvmModel model = train_svm(separated_clouds());
  SparseVector far{{{0, 5000.0}, {1, 4000.0}}};
  CHECK(decision_value(model, far) == doctest::Approx(model.bias));
  TaggedParagraph p{"far", tokenize(counts_text({5000, 4000}))};
  CHECK(predict_svm(model, p).label ==
        (model.bias >= 0.0 ? model.classes[0] : model.classes[1]));
}

TEST_CASE("iteration budget exhaustion reports the final violation") {
  SvmConfig config;
  config.max_iter = 2;
  CHECK_THROWS_WITH_AS(train_svm(overlapping_clouds(), config),
                       doctest::Contains("did not converge"), TrainingError);
}

TEST_CASE("invalid configuration and degenerate data are rejected") {
  std::vector<LabeledParagraph> train = {point("1", {1, 0}, "A"),
                                         point("2", {0, 1}, "B")};
  SvmConfig bad;
  bad.c = 0.0;
  CHECK_THROWS_AS(train_svm(train, bad), ConfigError);
  bad = {};
  bad.tol = -1.0;
  CHECK_THROWS_AS(train_svm(train, bad), ConfigError);
  bad = {};
  bad.gamma = SvmGamma::fixed(-2.0);
  CHECK_THROWS_AS(train_svm(train, bad), ConfigError);

  std::vector<LabeledParagraph> mono = {point("1", {1, 0}, "A"),
                                        point("2", {0, 1}, "A")};
  CHECK_THROWS_AS(train_svm(mono), DataError);
}

TEST_CASE("model round-trips through JSON with identical decisions") {
  testutil::TempDir dir;
  std::vector<LabeledParagraph> train = separated_clouds();
  SvmModel model = train_svm(train);
  save_model(model, dir.file("svm.json"));
  SvmModel loaded = load_svm_model(dir.file("svm.json"));

  CHECK(loaded.classes == model.classes);
  CHECK(loaded.gamma == model.gamma);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.support_vectors.size() == model.support_vectors.size());
  for (const auto& ex : train) {
    SvmPrediction a = predict_svm(model, ex.paragraph);
    SvmPrediction b = predict_svm(loaded, ex.paragraph);
    CHECK(a.decision == b.decision);  // exact: shortest-round-trip floats
    CHECK(a.label == b.label);
  }

  testutil::write_file(dir.file("other.json"),
                       "{\"model\": \"nb\", \"format_version\": 1}");
  CHECK_THROWS_AS(load_svm_model(dir.file("other.json")), DataError);
}
