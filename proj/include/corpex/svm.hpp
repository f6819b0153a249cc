#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpex/dataset.hpp"
#include "corpex/vocab.hpp"

namespace corpex {

struct SvmGamma {
  enum class Kind { Scale, Fixed };
  Kind kind = Kind::Scale;
  double value = 0.0;  // used when kind == Fixed

  static SvmGamma scale() { return {Kind::Scale, 0.0}; }
  static SvmGamma fixed(double v) { return {Kind::Fixed, v}; }
};

struct SvmConfig {
  double c = 1.0;
  SvmGamma gamma = SvmGamma::scale();
  double tol = 1e-5;
  // One iteration = one working-pair update.
  size_t max_iter = 1000000;
  bool record_objective = false;
};

// RBF-kernel soft-margin SVM over count bag-of-words features, trained with
// SMO (maximal-violating-pair working set selection).  classes[0] is the
// positive class (+1) and takes decision-value ties.
struct SvmModel {
  std::array<std::string, 2> classes;
  Vocabulary vocab;
  double gamma = 1.0;
  double c = 1.0;
  double tol = 1e-5;
  double bias = 0.0;
  std::vector<SparseVector> support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i per support vector

  // Training diagnostics.
  size_t iterations = 0;
  double final_violation = 0.0;
  // Dual objective after every pair update (recorded when asked);
  // non-decreasing by construction of SMO.
  std::vector<double> objective_trace;
};

struct SvmPrediction {
  std::string label;
  double decision = 0.0;
};

double rbf_kernel(const SparseVector& a, const SparseVector& b, double gamma);

// gamma_scale = 1 / (V * var(X)) over all n*V entries of the count matrix
// (population variance); a constant matrix falls back to gamma = 1.
double gamma_scale(std::span<const SparseVector> rows, size_t vocab_size);

// Throws DataError unless exactly two classes are present; throws
// TrainingError (with the final KKT violation) when the iteration budget
// runs out before m(alpha) - M(alpha) <= tol.
SvmModel train_svm(std::span<const LabeledParagraph> train,
                   const SvmConfig& config = {});

SvmPrediction predict_svm(const SvmModel& model,
                          const TaggedParagraph& paragraph);
double decision_value(const SvmModel& model, const SparseVector& features);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_model_from_json(const nlohmann::json& j);
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm_model(const std::filesystem::path& path);

}  // namespace corpex
