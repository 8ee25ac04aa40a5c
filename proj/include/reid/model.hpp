#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "reid/data.hpp"
#include "reid/matrix.hpp"

namespace reid {

struct LayerParams {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out

  bool operator==(const LayerParams&) const = default;
};

// Feed-forward identity classifier. Hidden layers use a rectifier, the last
// layer is linear with one output per training identity. The post-activation
// output of layer `embedding_layer_index` is the retrieval feature; -1 means
// the raw input (a model with no hidden layer has nothing better to offer).
struct ModelParams {
  std::vector<LayerParams> layers;
  std::vector<LayerParams> momentum;  // same shapes, all zero at init
  int embedding_layer_index = -1;

  std::size_t input_dim() const {
    return layers.empty() ? 0 : layers.front().weight.cols;
  }
  std::size_t num_classes() const {
    return layers.empty() ? 0 : layers.back().weight.rows;
  }
  std::size_t embedding_dim() const {
    if (embedding_layer_index < 0) return input_dim();
    return layers[static_cast<std::size_t>(embedding_layer_index)].weight.rows;
  }

  bool operator==(const ModelParams&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch_size = 32;
  int epochs = 25;
  int lr_step_epochs = 5;
  double lr_factor = 0.1;
  std::uint64_t seed = 0;
  std::vector<int> hidden_dims;

  bool operator==(const TrainConfig&) const = default;
};

// Indices into a LabeledDataset.
using Batch = std::vector<std::size_t>;

struct Gradients {
  std::vector<LayerParams> layers;  // same shapes as the model
  double mean_loss = 0.0;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_val_accuracy;  // empty when no validation set
};

// Gaussian(0, 0.01) weights, zero biases, zero momentum buffers. The
// embedding layer is the last hidden layer (-1 if there is none).
ModelParams init_model(std::size_t input_dim, const std::vector<int>& hidden_dims,
                       int num_classes, std::uint64_t seed);

// Returns (logits, embedding). Logits carry no softmax.
std::pair<std::vector<double>, FeatureVector> forward(const ModelParams& model,
                                                      const FeatureVector& x);

// Returns (loss, d loss / d logits), stabilized by max subtraction.
std::pair<double, std::vector<double>> softmax_loss(
    const std::vector<double>& logits, int label);

// Gradient of the mean loss over the batch w.r.t. every parameter.
Gradients backward(const ModelParams& model, const Batch& batch,
                   const LabeledDataset& dataset);

// learning_rate * lr_factor^floor(epoch / lr_step_epochs)
double effective_learning_rate(const TrainConfig& config, int epoch);

// Heavy-ball descent, weight decay folded into the gradient:
// v <- mu*v - lr_e*(g + wd*theta); theta <- theta + v.
void sgd_step(ModelParams& model, const Gradients& grads,
              const TrainConfig& config, int epoch);

// Seeded shuffle per epoch, sequential minibatches, the last (possibly
// smaller) batch included. Deterministic under (data, config).
std::pair<ModelParams, TrainLog> train(const LabeledDataset& train_set,
                                       const LabeledDataset& val_set,
                                       const TrainConfig& config);

std::vector<FeatureVector> extract_features(
    const ModelParams& model, const std::vector<EmbeddingRecord>& records);
std::vector<FeatureVector> extract_features(
    const ModelParams& model, const std::vector<FeatureVector>& inputs);

// Fraction of records whose argmax logit equals their identity.
double classification_accuracy(const ModelParams& model,
                               const LabeledDataset& dataset);

}  // namespace reid
