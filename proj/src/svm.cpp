#include "corpex/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "corpex/errors.hpp"
#include "corpex/version.hpp"

namespace corpex {

using nlohmann::json;

double rbf_kernel(const SparseVector& a, const SparseVector& b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

double gamma_scale(std::span<const SparseVector> rows, size_t vocab_size) {
  if (vocab_size == 0) return 1.0;
  // Mean and variance over all n*V matrix entries; the sparse rows only
  // store the non-zeros, the zeros still count.
  double n_entries =
      static_cast<double>(rows.size()) * static_cast<double>(vocab_size);
  if (n_entries == 0) return 1.0;
  double sum = 0.0, sum_sq = 0.0;
  for (const SparseVector& row : rows) {
    for (const auto& [idx, value] : row.entries) {
      sum += value;
      sum_sq += value * value;
    }
  }
  double mean = sum / n_entries;
  double var = sum_sq / n_entries - mean * mean;
  if (var <= 0.0) return 1.0;  // constant matrix: degenerate, match library
  return 1.0 / (static_cast<double>(vocab_size) * var);
}

namespace {

constexpr double kTau = 1e-12;  // guards against a null curvature

struct Problem {
  std::vector<SparseVector> x;
  std::vector<double> y;  // +1 / -1
  std::array<std::string, 2> classes;
};

Problem build_problem(std::span<const LabeledParagraph> train,
                      const Vocabulary& vocab) {
  Problem prob;
  std::vector<std::string> seen;
  for (const LabeledParagraph& ex : train) {
    if (std::find(seen.begin(), seen.end(), ex.label) == seen.end())
      seen.push_back(ex.label);
  }
  if (seen.size() != 2)
    throw DataError("SVM needs exactly 2 classes, got " +
                    std::to_string(seen.size()));
  prob.classes = {seen[0], seen[1]};
  for (const LabeledParagraph& ex : train) {
    prob.x.push_back(count_bow(ex.paragraph, vocab));
    prob.y.push_back(ex.label == seen[0] ? 1.0 : -1.0);
  }
  return prob;
}

}  // namespace

SvmModel train_svm(std::span<const LabeledParagraph> train,
                   const SvmConfig& config) {
  if (config.c <= 0.0) throw ConfigError("SVM C must be > 0");
  if (config.tol <= 0.0) throw ConfigError("SVM tolerance must be > 0");
  Vocabulary vocab = Vocabulary::build(train);
  Problem prob = build_problem(train, vocab);
  const size_t n = prob.x.size();
  const double c = config.c;

  double gamma = config.gamma.kind == SvmGamma::Kind::Scale
                     ? gamma_scale(prob.x, vocab.size())
                     : config.gamma.value;
  if (gamma <= 0.0) throw ConfigError("SVM gamma must be > 0");

  // Full kernel matrix; the experiment grids stay in the low thousands of
  // examples, so n^2 doubles is the cheap and cache-friendly choice.
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i; j < n; ++j) {
      double v = rbf_kernel(prob.x[i], prob.x[j], gamma);
      k[i][j] = v;
      k[j][i] = v;
    }
  }

  // SMO on: min 1/2 a^T Q a - e^T a,  0 <= a <= C,  y^T a = 0,
  // with Q_ij = y_i y_j K_ij.  G is the gradient Q a - e.
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  SvmModel model;
  if (config.record_objective) model.objective_trace.reserve(1024);

  auto objective = [&] {
    // 1/2 a^T Q a - e^T a  ==  (a^T G - e^T a) / 2, since G = Q a - e.
    double ag = 0.0, ae = 0.0;
    for (size_t t = 0; t < n; ++t) {
      ag += alpha[t] * grad[t];
      ae += alpha[t];
    }
    // Return the dual (maximization) objective, which SMO never decreases.
    return -((ag - ae) / 2.0);
  };

  size_t iter = 0;
  double violation = std::numeric_limits<double>::infinity();
  while (true) {
    // Maximal violating pair: i maximizes -y G over I_up, j minimizes it
    // over I_low.  First index wins ties, keeping runs deterministic.
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    size_t i = n, j = n;
    for (size_t t = 0; t < n; ++t) {
      bool in_up = (prob.y[t] > 0 && alpha[t] < c) ||
                   (prob.y[t] < 0 && alpha[t] > 0);
      bool in_low = (prob.y[t] < 0 && alpha[t] < c) ||
                    (prob.y[t] > 0 && alpha[t] > 0);
      double v = -prob.y[t] * grad[t];
      if (in_up && v > m_up) {
        m_up = v;
        i = t;
      }
      if (in_low && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    violation = m_up - m_low;
    if (!(violation > config.tol) || i == n || j == n) break;
    if (iter >= config.max_iter)
      throw TrainingError(
          "SMO did not converge in " + std::to_string(config.max_iter) +
          " iterations; final KKT violation " + std::to_string(violation));
    ++iter;

    // Two-variable update along the constraint y_i a_i + y_j a_j = const.
    double old_ai = alpha[i], old_aj = alpha[j];
    if (prob.y[i] != prob.y[j]) {
      double quad = k[i][i] + k[j][j] - 2.0 * k[i][j];
      if (quad <= 0.0) quad = kTau;
      double delta = (-grad[i] - grad[j]) / quad;
      double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = -diff;
        }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = c + diff;
        }
      }
    } else {
      double quad = k[i][i] + k[j][j] - 2.0 * k[i][j];
      if (quad <= 0.0) quad = kTau;
      double delta = (grad[i] - grad[j]) / quad;
      double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }

    double d_ai = alpha[i] - old_ai;
    double d_aj = alpha[j] - old_aj;
    for (size_t t = 0; t < n; ++t) {
      grad[t] += prob.y[t] * (prob.y[i] * k[t][i] * d_ai +
                              prob.y[j] * k[t][j] * d_aj);
    }
    if (config.record_objective) model.objective_trace.push_back(objective());
  }

  // Bias from the free support vectors when any exist, else the midpoint of
  // the feasible interval [M, m]; -yG is exactly the per-point b estimate.
  double b;
  double free_sum = 0.0;
  size_t free_count = 0;
  for (size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0 && alpha[t] < c) {
      free_sum += -prob.y[t] * grad[t];
      ++free_count;
    }
  }
  if (free_count > 0) {
    b = free_sum / static_cast<double>(free_count);
  } else {
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < n; ++t) {
      bool in_up = (prob.y[t] > 0 && alpha[t] < c) ||
                   (prob.y[t] < 0 && alpha[t] > 0);
      bool in_low = (prob.y[t] < 0 && alpha[t] < c) ||
                    (prob.y[t] > 0 && alpha[t] > 0);
      double v = -prob.y[t] * grad[t];
      if (in_up) m_up = std::max(m_up, v);
      if (in_low) m_low = std::min(m_low, v);
    }
    b = (m_up + m_low) / 2.0;
  }

  model.classes = prob.classes;
  model.vocab = std::move(vocab);
  model.gamma = gamma;
  model.c = c;
  model.tol = config.tol;
  model.bias = b;
  model.iterations = iter;
  model.final_violation = violation;
  for (size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.support_vectors.push_back(prob.x[t]);
      model.dual_coef.push_back(alpha[t] * prob.y[t]);
    }
  }
  return model;
}

double decision_value(const SvmModel& model, const SparseVector& features) {
  double acc = model.bias;
  for (size_t s = 0; s < model.support_vectors.size(); ++s) {
    acc += model.dual_coef[s] *
           rbf_kernel(model.support_vectors[s], features, model.gamma);
  }
  return acc;
}

SvmPrediction predict_svm(const SvmModel& model,
                          const TaggedParagraph& paragraph) {
  double d = decision_value(model, count_bow(paragraph, model.vocab));
  // classes[0] is the +1 class and takes exact-zero ties.
  return {d >= 0.0 ? model.classes[0] : model.classes[1], d};
}

json to_json(const SvmModel& model) {
  json svs = json::array();
  for (const SparseVector& sv : model.support_vectors) {
    json entries = json::array();
    for (const auto& [idx, value] : sv.entries)
      entries.push_back({idx, value});
    svs.push_back(entries);
  }
  return {{"format_version", kModelFormatVersion},
          {"model", "svm"},
          {"classes", model.classes},
          {"gamma", model.gamma},
          {"c", model.c},
          {"tol", model.tol},
          {"bias", model.bias},
          {"vocabulary", model.vocab.words()},
          {"support_vectors", svs},
          {"dual_coef", model.dual_coef},
          {"iterations", model.iterations},
          {"final_violation", model.final_violation}};
}

SvmModel svm_model_from_json(const json& j) {
  if (!j.is_object() || j.value("model", "") != "svm")
    throw DataError("not an SVM model file");
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw DataError("unsupported model format version");
  SvmModel model;
  j.at("classes").get_to(model.classes);
  model.gamma = j.at("gamma").get<double>();
  model.c = j.at("c").get<double>();
  model.tol = j.at("tol").get<double>();
  model.bias = j.at("bias").get<double>();
  for (const auto& word : j.at("vocabulary"))
    model.vocab.intern(word.get<std::string>());
  for (const auto& sv : j.at("support_vectors")) {
    SparseVector v;
    for (const auto& entry : sv)
      v.entries.emplace_back(entry.at(0).get<uint32_t>(),
                             entry.at(1).get<double>());
    model.support_vectors.push_back(std::move(v));
  }
  j.at("dual_coef").get_to(model.dual_coef);
  model.iterations = j.value("iterations", 0);
  model.final_violation = j.value("final_violation", 0.0);
  if (model.dual_coef.size() != model.support_vectors.size())
    throw DataError("dual coefficients do not match support vectors");
  return model;
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << to_json(model).dump(2) << '\n';
}

SvmModel load_svm_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }
  return svm_model_from_json(j);
}

}  // namespace corpex
