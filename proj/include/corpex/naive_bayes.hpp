#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpex/dataset.hpp"
#include "corpex/vocab.hpp"

namespace corpex {

// Bernoulli Naive Bayes over binary bag-of-words features.
//
//   theta_{c,w} = (docfreq_{c,w} + alpha) / (N_c + 2 alpha)
//
// Binary classifier: classes_[0] is the first label seen in training order
// and wins argmax ties.
struct NbModel {
  std::array<std::string, 2> classes;
  Vocabulary vocab;
  double alpha = 1.0;
  std::array<double, 2> log_prior{};            // log(N_c / N)
  std::array<std::vector<double>, 2> log_theta;        // log p(w present | c)
  std::array<std::vector<double>, 2> log_one_minus;    // log p(w absent | c)
};

struct NbPrediction {
  std::string label;
  std::array<double, 2> log_joint{};      // log prior + log likelihood
  std::array<double, 2> log_posterior{};  // normalized over the two classes
};

// Needs >= 1 example per class and exactly two distinct labels; alpha > 0.
NbModel train_nb(std::span<const LabeledParagraph> train, double alpha = 1.0);

// Presence features over the training vocabulary; OOV words are ignored; an
// empty paragraph degenerates to the all-absent likelihood plus prior.
NbPrediction predict_nb(const NbModel& model, const TaggedParagraph& paragraph);

nlohmann::json to_json(const NbModel& model);
NbModel nb_model_from_json(const nlohmann::json& j);
void save_model(const NbModel& model, const std::filesystem::path& path);
NbModel load_nb_model(const std::filesystem::path& path);

}  // namespace corpex
