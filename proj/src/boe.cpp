#include "corpex/boe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"
#include "corpex/version.hpp"

namespace corpex {

using nlohmann::json;

namespace {

std::array<std::string, 2> collect_classes(
    std::span<const LabeledParagraph> data) {
  std::vector<std::string> seen;
  for (const LabeledParagraph& ex : data) {
    if (std::find(seen.begin(), seen.end(), ex.label) == seen.end())
      seen.push_back(ex.label);
  }
  if (seen.size() != 2)
    throw DataError("binary classifier needs exactly 2 classes, got " +
                    std::to_string(seen.size()));
  return {seen[0], seen[1]};
}

struct Forward {
  std::vector<double> z1, a1;  // pre/post activation, dropout applied to a1
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
};

Forward forward_pass(const BoeParams& p, std::span<const double> x,
                     const std::vector<double>* dropout_scale) {
  Forward f;
  f.z1.resize(p.hidden_dim);
  f.a1.resize(p.hidden_dim);
  for (size_t h = 0; h < p.hidden_dim; ++h) {
    double acc = p.b1[h];
    const double* row = &p.w1[h * p.input_dim];
    for (size_t d = 0; d < p.input_dim; ++d) acc += row[d] * x[d];
    f.z1[h] = acc;
    double a = acc > 0.0 ? acc : 0.0;
    if (dropout_scale) a *= (*dropout_scale)[h];
    f.a1[h] = a;
  }
  for (size_t k = 0; k < p.output_dim; ++k) {
    double acc = p.b2[k];
    const double* row = &p.w2[k * p.hidden_dim];
    for (size_t h = 0; h < p.hidden_dim; ++h) acc += row[h] * f.a1[h];
    f.logits[k] = acc;
  }
  double hi = std::max(f.logits[0], f.logits[1]);
  double z = std::exp(f.logits[0] - hi) + std::exp(f.logits[1] - hi);
  f.probs = {std::exp(f.logits[0] - hi) / z, std::exp(f.logits[1] - hi) / z};
  return f;
}

double example_loss(const Forward& f, int label) {
  double hi = std::max(f.logits[0], f.logits[1]);
  double lse =
      hi + std::log(std::exp(f.logits[0] - hi) + std::exp(f.logits[1] - hi));
  return lse - f.logits[label];
}

// Gradient of one example's CE loss; accumulates into `grad`, scaled.
void backward_pass(const BoeParams& p, std::span<const double> x,
                   const Forward& f, int label,
                   const std::vector<double>* dropout_scale, double scale,
                   BoeParams& grad) {
  std::array<double, 2> dlogits = f.probs;
  dlogits[label] -= 1.0;
  std::vector<double> da1(p.hidden_dim, 0.0);
  for (size_t k = 0; k < p.output_dim; ++k) {
    double g = dlogits[k] * scale;
    grad.b2[k] += g;
    double* wrow = &grad.w2[k * p.hidden_dim];
    const double* prow = &p.w2[k * p.hidden_dim];
    for (size_t h = 0; h < p.hidden_dim; ++h) {
      wrow[h] += g * f.a1[h];
      da1[h] += prow[h] * dlogits[k];
    }
  }
  for (size_t h = 0; h < p.hidden_dim; ++h) {
    double g = da1[h];
    if (dropout_scale) g *= (*dropout_scale)[h];
    if (f.z1[h] <= 0.0) g = 0.0;  // ReLU gate
    g *= scale;
    if (g == 0.0) continue;
    grad.b1[h] += g;
    double* wrow = &grad.w1[h * p.input_dim];
    for (size_t d = 0; d < p.input_dim; ++d) wrow[d] += g * x[d];
  }
}

BoeParams zeros_like(const BoeParams& p) {
  BoeParams z;
  z.input_dim = p.input_dim;
  z.hidden_dim = p.hidden_dim;
  z.output_dim = p.output_dim;
  z.w1.assign(p.w1.size(), 0.0);
  z.b1.assign(p.b1.size(), 0.0);
  z.w2.assign(p.w2.size(), 0.0);
  z.b2.assign(p.b2.size(), 0.0);
  return z;
}

}  // namespace

std::array<double, 2> boe_logits(const BoeParams& params,
                                 std::span<const double> input) {
  return forward_pass(params, input, nullptr).logits;
}

double boe_loss(const BoeParams& params,
                std::span<const std::vector<double>> inputs,
                std::span<const int> labels) {
  double total = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    Forward f = forward_pass(params, inputs[i], nullptr);
    total += example_loss(f, labels[i]);
  }
  return total / static_cast<double>(inputs.size());
}

BoeParams boe_gradients(const BoeParams& params,
                        std::span<const std::vector<double>> inputs,
                        std::span<const int> labels) {
  BoeParams grad = zeros_like(params);
  double scale = 1.0 / static_cast<double>(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    Forward f = forward_pass(params, inputs[i], nullptr);
    backward_pass(params, inputs[i], f, labels[i], nullptr, scale, grad);
  }
  return grad;
}

BoeParams boe_init(size_t input_dim, size_t hidden_dim, size_t output_dim,
                   uint64_t seed) {
  BoeParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.output_dim = output_dim;
  Rng rng = Rng::derive(seed, "boe-init");
  auto xavier = [&](std::vector<double>& w, size_t fan_in, size_t fan_out,
                    size_t count) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    w.resize(count);
    for (double& v : w) v = (rng.next_double() * 2.0 - 1.0) * limit;
  };
  xavier(p.w1, input_dim, hidden_dim, hidden_dim * input_dim);
  p.b1.assign(hidden_dim, 0.0);
  xavier(p.w2, hidden_dim, output_dim, output_dim * hidden_dim);
  p.b2.assign(output_dim, 0.0);
  return p;
}

BoeTrainResult train_boe(std::span<const LabeledParagraph> train,
                         std::span<const LabeledParagraph> valid,
                         const EmbeddingTable& table,
                         const BoeConfig& config) {
  if (config.dropout < 0.0 || config.dropout >= 1.0)
    throw ConfigError("dropout must be in [0, 1)");
  if (config.learning_rate <= 0.0)
    throw ConfigError("learning rate must be > 0");
  if (train.empty()) throw DataError("BoE training set is empty");

  BoeTrainResult result;
  result.model.classes = collect_classes(train);
  result.model.pooling = config.pooling;

  auto pool_all = [&](std::span<const LabeledParagraph> data,
                      std::vector<std::vector<double>>& xs,
                      std::vector<int>& ys) {
    for (const LabeledParagraph& ex : data) {
      xs.push_back(embed_paragraph(ex.paragraph, table, config.pooling));
      ys.push_back(ex.label == result.model.classes[0] ? 0 : 1);
    }
  };
  std::vector<std::vector<double>> train_x, valid_x;
  std::vector<int> train_y, valid_y;
  pool_all(train, train_x, train_y);
  for (const LabeledParagraph& ex : valid) {
    valid_x.push_back(embed_paragraph(ex.paragraph, table, config.pooling));
    valid_y.push_back(ex.label == result.model.classes[0] ? 0 : 1);
  }

  BoeParams params =
      boe_init(table.dim(), config.hidden_dim, 2, config.seed);
  result.model.params = params;
  if (config.epochs == 0) return result;

  BoeParams velocity = zeros_like(params);
  Rng rng = Rng::derive(config.seed, "boe-train");
  const double keep = 1.0 - config.dropout;

  double best_accuracy = -1.0;
  std::vector<size_t> order(train_x.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> dropout_scale(params.hidden_dim, 1.0);
  for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t idx : order) {
      const std::vector<double>& x = train_x[idx];
      int label = train_y[idx];
      const std::vector<double>* mask = nullptr;
      if (config.dropout > 0.0) {
        for (double& m : dropout_scale)
          m = rng.next_double() < keep ? 1.0 / keep : 0.0;  // inverted dropout
        mask = &dropout_scale;
      }
      Forward f = forward_pass(params, x, mask);
      loss_sum += example_loss(f, label);
      BoeParams grad = zeros_like(params);
      backward_pass(params, x, f, label, mask, 1.0, grad);
      auto update = [&](std::vector<double>& w, std::vector<double>& v,
                        const std::vector<double>& g) {
        for (size_t i = 0; i < w.size(); ++i) {
          v[i] = config.momentum * v[i] - config.learning_rate * g[i];
          w[i] += v[i];
        }
      };
      update(params.w1, velocity.w1, grad.w1);
      update(params.b1, velocity.b1, grad.b1);
      update(params.w2, velocity.w2, grad.w2);
      update(params.b2, velocity.b2, grad.b2);
    }
    double epoch_loss = loss_sum / static_cast<double>(train_x.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingError("BoE training diverged (loss is not finite) at epoch " +
                          std::to_string(epoch));
    result.train_loss.push_back(epoch_loss);

    if (!valid_x.empty()) {
      size_t correct = 0;
      for (size_t i = 0; i < valid_x.size(); ++i) {
        Forward f = forward_pass(params, valid_x[i], nullptr);
        int predicted = f.logits[0] >= f.logits[1] ? 0 : 1;
        if (predicted == valid_y[i]) ++correct;
      }
      double accuracy =
          static_cast<double>(correct) / static_cast<double>(valid_x.size());
      result.valid_accuracy.push_back(accuracy);
      if (accuracy > best_accuracy) {  // strict: earliest epoch wins ties
        best_accuracy = accuracy;
        result.model.params = params;
        result.best_epoch = epoch;
      }
    } else {
      result.model.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

BoePrediction predict_boe(const BoeModel& model,
                          const TaggedParagraph& paragraph,
                          const EmbeddingTable& table) {
  std::vector<double> pooled = embed_paragraph(paragraph, table, model.pooling);
  Forward f = forward_pass(model.params, pooled, nullptr);
  BoePrediction out;
  out.probabilities = f.probs;
  out.label =
      f.logits[0] >= f.logits[1] ? model.classes[0] : model.classes[1];
  return out;
}

json to_json(const BoeModel& model) {
  return {{"format_version", kModelFormatVersion},
          {"model", "boe"},
          {"classes", model.classes},
          {"pooling", to_string(model.pooling)},
          {"input_dim", model.params.input_dim},
          {"hidden_dim", model.params.hidden_dim},
          {"output_dim", model.params.output_dim},
          {"w1", model.params.w1},
          {"b1", model.params.b1},
          {"w2", model.params.w2},
          {"b2", model.params.b2}};
}

BoeModel boe_model_from_json(const json& j) {
  if (!j.is_object() || j.value("model", "") != "boe")
    throw DataError("not a bag-of-embeddings model file");
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw DataError("unsupported model format version");
  BoeModel model;
  j.at("classes").get_to(model.classes);
  model.pooling =
      j.at("pooling").get<std::string>() == "sum" ? Pooling::Sum
                                                  : Pooling::Average;
  model.params.input_dim = j.at("input_dim").get<size_t>();
  model.params.hidden_dim = j.at("hidden_dim").get<size_t>();
  model.params.output_dim = j.at("output_dim").get<size_t>();
  j.at("w1").get_to(model.params.w1);
  j.at("b1").get_to(model.params.b1);
  j.at("w2").get_to(model.params.w2);
  j.at("b2").get_to(model.params.b2);
  if (model.params.w1.size() !=
          model.params.hidden_dim * model.params.input_dim ||
      model.params.w2.size() !=
          model.params.output_dim * model.params.hidden_dim)
    throw DataError("model weight shapes are inconsistent");
  return model;
}

void save_model(const BoeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << to_json(model).dump(2) << '\n';
}

BoeModel load_boe_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }
  return boe_model_from_json(j);
}

}  // namespace corpex
