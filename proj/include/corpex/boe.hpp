#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpex/dataset.hpp"
#include "corpex/embeddings.hpp"

namespace corpex {

// Bag-of-embeddings classifier: pooled word vectors feed one hidden layer
// (ReLU, dropout while training) and a softmax output.  The embedding table
// is frozen; only these parameters train.
struct BoeParams {
  size_t input_dim = 0;
  size_t hidden_dim = 0;
  size_t output_dim = 2;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // output_dim x hidden_dim, row-major
  std::vector<double> b2;  // output_dim

  bool operator==(const BoeParams&) const = default;
};

struct BoeConfig {
  Pooling pooling = Pooling::Sum;
  size_t hidden_dim = 100;
  double learning_rate = 0.01;
  double momentum = 0.9;
  size_t epochs = 50;
  double dropout = 0.2;
  uint64_t seed = 1;
};

struct BoeModel {
  std::array<std::string, 2> classes;
  Pooling pooling = Pooling::Sum;
  BoeParams params;
};

// Inference-mode forward pass (no dropout).
std::array<double, 2> boe_logits(const BoeParams& params,
                                 std::span<const double> input);

// Mean cross-entropy over a batch of pooled inputs, dropout off.  Exposed
// for the finite-difference checks.
double boe_loss(const BoeParams& params,
                std::span<const std::vector<double>> inputs,
                std::span<const int> labels);

// Analytic gradients of boe_loss with respect to every parameter tensor.
BoeParams boe_gradients(const BoeParams& params,
                        std::span<const std::vector<double>> inputs,
                        std::span<const int> labels);

// Xavier-uniform initialization: +-sqrt(6 / (fan_in + fan_out)).
BoeParams boe_init(size_t input_dim, size_t hidden_dim, size_t output_dim,
                   uint64_t seed);

struct BoeTrainResult {
  BoeModel model;
  std::vector<double> train_loss;      // per epoch
  std::vector<double> valid_accuracy;  // per epoch
  size_t best_epoch = 0;               // 1-based; 0 = untrained
};

// Per-example SGD with momentum; inverted dropout on the hidden activation
// during training only.  Returns the snapshot with the best validation
// accuracy (earliest epoch wins ties); with an empty validation set the
// final epoch is returned.  Throws TrainingError if the loss diverges.
BoeTrainResult train_boe(std::span<const LabeledParagraph> train,
                         std::span<const LabeledParagraph> valid,
                         const EmbeddingTable& table, const BoeConfig& config);

struct BoePrediction {
  std::string label;
  std::array<double, 2> probabilities{};
};

BoePrediction predict_boe(const BoeModel& model,
                          const TaggedParagraph& paragraph,
                          const EmbeddingTable& table);

nlohmann::json to_json(const BoeModel& model);
BoeModel boe_model_from_json(const nlohmann::json& j);
void save_model(const BoeModel& model, const std::filesystem::path& path);
BoeModel load_boe_model(const std::filesystem::path& path);

}  // namespace corpex
