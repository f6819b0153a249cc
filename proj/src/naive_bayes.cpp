#include "corpex/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "corpex/errors.hpp"
#include "corpex/version.hpp"

namespace corpex {

using nlohmann::json;

namespace {

// First-seen order; exactly two classes (all the experiments are binary).
std::array<std::string, 2> collect_classes(
    std::span<const LabeledParagraph> train) {
  std::vector<std::string> seen;
  for (const LabeledParagraph& ex : train) {
    if (std::find(seen.begin(), seen.end(), ex.label) == seen.end())
      seen.push_back(ex.label);
  }
  if (seen.size() != 2)
    throw DataError("binary classifier needs exactly 2 classes, got " +
                    std::to_string(seen.size()));
  return {seen[0], seen[1]};
}

}  // namespace

NbModel train_nb(std::span<const LabeledParagraph> train, double alpha) {
  if (alpha <= 0.0) throw ConfigError("NB smoothing alpha must be > 0");
  if (train.empty()) throw DataError("NB training set is empty");
  NbModel model;
  model.alpha = alpha;
  model.classes = collect_classes(train);
  model.vocab = Vocabulary::build(train);

  const size_t v = model.vocab.size();
  std::array<double, 2> n_c{};
  std::array<std::vector<double>, 2> docfreq;
  docfreq[0].assign(v, 0.0);
  docfreq[1].assign(v, 0.0);
  for (const LabeledParagraph& ex : train) {
    size_t c = ex.label == model.classes[0] ? 0 : 1;
    n_c[c] += 1.0;
    std::set<uint32_t> present;
    for (const Token& t : ex.paragraph.tokens) {
      if (auto idx = model.vocab.index(t.surface)) present.insert(*idx);
    }
    for (uint32_t idx : present) docfreq[c][idx] += 1.0;
  }
  for (size_t c = 0; c < 2; ++c) {
    if (n_c[c] == 0.0)
      throw DataError("class '" + model.classes[c] + "' has no examples");
    model.log_prior[c] =
        std::log(n_c[c] / static_cast<double>(train.size()));
    model.log_theta[c].resize(v);
    model.log_one_minus[c].resize(v);
    for (size_t w = 0; w < v; ++w) {
      double theta = (docfreq[c][w] + alpha) / (n_c[c] + 2.0 * alpha);
      model.log_theta[c][w] = std::log(theta);
      model.log_one_minus[c][w] = std::log1p(-theta);
    }
  }
  return model;
}

NbPrediction predict_nb(const NbModel& model,
                        const TaggedParagraph& paragraph) {
  std::set<uint32_t> present;
  for (const Token& t : paragraph.tokens) {
    if (auto idx = model.vocab.index(t.surface)) present.insert(*idx);
  }
  NbPrediction out;
  for (size_t c = 0; c < 2; ++c) {
    // All-absent baseline, then swap in the present words.
    double base = model.log_prior[c];
    for (size_t w = 0; w < model.vocab.size(); ++w)
      base += model.log_one_minus[c][w];
    for (uint32_t w : present)
      base += model.log_theta[c][w] - model.log_one_minus[c][w];
    out.log_joint[c] = base;
  }
  double hi = std::max(out.log_joint[0], out.log_joint[1]);
  double norm =
      hi + std::log(std::exp(out.log_joint[0] - hi) +
                    std::exp(out.log_joint[1] - hi));
  out.log_posterior = {out.log_joint[0] - norm, out.log_joint[1] - norm};
  // Ties go to the first class in training order.
  out.label =
      out.log_joint[0] >= out.log_joint[1] ? model.classes[0] : model.classes[1];
  return out;
}

json to_json(const NbModel& model) {
  return {{"format_version", kModelFormatVersion},
          {"model", "nb"},
          {"classes", model.classes},
          {"alpha", model.alpha},
          {"vocabulary", model.vocab.words()},
          {"log_prior", model.log_prior},
          {"log_theta", model.log_theta},
          {"log_one_minus", model.log_one_minus}};
}

NbModel nb_model_from_json(const json& j) {
  if (!j.is_object() || j.value("model", "") != "nb")
    throw DataError("not a Naive Bayes model file");
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw DataError("unsupported model format version");
  NbModel model;
  j.at("classes").get_to(model.classes);
  model.alpha = j.at("alpha").get<double>();
  for (const auto& word : j.at("vocabulary"))
    model.vocab.intern(word.get<std::string>());
  j.at("log_prior").get_to(model.log_prior);
  j.at("log_theta").get_to(model.log_theta);
  j.at("log_one_minus").get_to(model.log_one_minus);
  for (size_t c = 0; c < 2; ++c) {
    if (model.log_theta[c].size() != model.vocab.size() ||
        model.log_one_minus[c].size() != model.vocab.size())
      throw DataError("model parameter arrays do not match vocabulary size");
  }
  return model;
}

void save_model(const NbModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << to_json(model).dump(2) << '\n';
}

NbModel load_nb_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }
  return nb_model_from_json(j);
}

}  // namespace corpex
