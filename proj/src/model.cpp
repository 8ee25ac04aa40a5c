#include "reid/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "reid/rng.hpp"

namespace reid {

ModelParams init_model(std::size_t input_dim,
                       const std::vector<int>& hidden_dims, int num_classes,
                       std::uint64_t seed) {
  if (input_dim == 0) throw std::runtime_error("input dimension must be >= 1");
  if (num_classes < 2) throw std::runtime_error("need at least two identities");
  for (int h : hidden_dims) {
    if (h < 1) throw std::runtime_error("hidden layer size must be >= 1");
  }

  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  for (int h : hidden_dims) dims.push_back(static_cast<std::size_t>(h));
  dims.push_back(static_cast<std::size_t>(num_classes));

  ModelParams model;
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerParams layer;
    layer.weight = Matrix(dims[l + 1], dims[l]);
    for (double& w : layer.weight.data) w = rng.next_gaussian(0.0, 0.01);
    layer.bias.assign(dims[l + 1], 0.0);
    model.layers.push_back(std::move(layer));

    LayerParams buf;
    buf.weight = Matrix(dims[l + 1], dims[l]);
    buf.bias.assign(dims[l + 1], 0.0);
    model.momentum.push_back(std::move(buf));
  }
  model.embedding_layer_index = static_cast<int>(model.layers.size()) - 2;
  return model;
}

namespace {

std::vector<double> affine(const LayerParams& layer,
                           const std::vector<double>& x) {
  std::vector<double> out(layer.weight.rows);
  for (std::size_t r = 0; r < layer.weight.rows; ++r) {
    double acc = layer.bias[r];
    const double* w = &layer.weight.data[r * layer.weight.cols];
    for (std::size_t c = 0; c < layer.weight.cols; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
  return out;
}

// Pre- and post-activation values for every layer.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;  // post.back() == logits (no relu)
};

ForwardTrace run_forward(const ModelParams& model, const FeatureVector& x) {
  if (model.layers.empty()) throw std::runtime_error("model has no layers");
  if (x.size() != model.input_dim()) {
    throw std::runtime_error("input dimension " + std::to_string(x.size()) +
                             " != model input " +
                             std::to_string(model.input_dim()));
  }
  ForwardTrace trace;
  std::vector<double> cur = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    std::vector<double> z = affine(model.layers[l], cur);
    trace.pre.push_back(z);
    if (l + 1 < model.layers.size()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    trace.post.push_back(z);
    cur = std::move(z);
  }
  return trace;
}

}  // namespace

std::pair<std::vector<double>, FeatureVector> forward(const ModelParams& model,
                                                      const FeatureVector& x) {
  ForwardTrace trace = run_forward(model, x);
  FeatureVector embedding;
  if (model.embedding_layer_index < 0) {
    embedding = x;
  } else {
    auto idx = static_cast<std::size_t>(model.embedding_layer_index);
    if (idx >= model.layers.size()) {
      throw std::runtime_error("embedding layer index out of range");
    }
    embedding = trace.post[idx];
  }
  return {trace.post.back(), std::move(embedding)};
}

std::pair<double, std::vector<double>> softmax_loss(
    const std::vector<double>& logits, int label) {
  if (logits.empty()) throw std::runtime_error("empty logits");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::runtime_error("label " + std::to_string(label) +
                             " out of range for " +
                             std::to_string(logits.size()) + " classes");
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  std::vector<double> probs(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(logits[j] - max_logit);
    sum += probs[j];
  }
  for (double& p : probs) p /= sum;

  const std::size_t y = static_cast<std::size_t>(label);
  double loss = -(logits[y] - max_logit - std::log(sum));
  std::vector<double> grad = std::move(probs);
  grad[y] -= 1.0;
  return {loss, std::move(grad)};
}

Gradients backward(const ModelParams& model, const Batch& batch,
                   const LabeledDataset& dataset) {
  if (batch.empty()) throw std::runtime_error("empty batch");
  Gradients grads;
  for (const LayerParams& layer : model.layers) {
    LayerParams g;
    g.weight = Matrix(layer.weight.rows, layer.weight.cols);
    g.bias.assign(layer.bias.size(), 0.0);
    grads.layers.push_back(std::move(g));
  }

  const std::size_t num_layers = model.layers.size();
  for (std::size_t index : batch) {
    if (index >= dataset.records.size()) {
      throw std::runtime_error("batch index out of range");
    }
    const EmbeddingRecord& record = dataset.records[index];
    ForwardTrace trace = run_forward(model, record.vector);
    auto [loss, delta] = softmax_loss(trace.post.back(), record.identity);
    grads.mean_loss += loss;

    // delta holds d loss / d pre-activation of the current layer.
    for (std::size_t l = num_layers; l-- > 0;) {
      const std::vector<double>& input =
          l == 0 ? record.vector : trace.post[l - 1];
      LayerParams& g = grads.layers[l];
      for (std::size_t r = 0; r < g.weight.rows; ++r) {
        double* gw = &g.weight.data[r * g.weight.cols];
        for (std::size_t c = 0; c < g.weight.cols; ++c) {
          gw[c] += delta[r] * input[c];
        }
        g.bias[r] += delta[r];
      }
      if (l == 0) break;
      const Matrix& w = model.layers[l].weight;
      std::vector<double> prev(w.cols, 0.0);
      for (std::size_t r = 0; r < w.rows; ++r) {
        const double* wr = &w.data[r * w.cols];
        for (std::size_t c = 0; c < w.cols; ++c) prev[c] += wr[c] * delta[r];
      }
      for (std::size_t c = 0; c < prev.size(); ++c) {
        if (trace.pre[l - 1][c] <= 0.0) prev[c] = 0.0;
      }
      delta = std::move(prev);
    }
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  grads.mean_loss *= scale;
  for (LayerParams& g : grads.layers) {
    for (double& w : g.weight.data) w *= scale;
    for (double& b : g.bias) b *= scale;
  }
  return grads;
}

double effective_learning_rate(const TrainConfig& config, int epoch) {
  if (config.lr_step_epochs < 1) {
    throw std::runtime_error("lr_step_epochs must be >= 1");
  }
  const int drops = epoch / config.lr_step_epochs;
  return config.learning_rate * std::pow(config.lr_factor, drops);
}

void sgd_step(ModelParams& model, const Gradients& grads,
              const TrainConfig& config, int epoch) {
  if (grads.layers.size() != model.layers.size()) {
    throw std::runtime_error("gradient/model layer count mismatch");
  }
  const double lr = effective_learning_rate(config, epoch);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    LayerParams& layer = model.layers[l];
    LayerParams& buf = model.momentum[l];
    const LayerParams& g = grads.layers[l];
    if (g.weight.rows != layer.weight.rows ||
        g.weight.cols != layer.weight.cols) {
      throw std::runtime_error("gradient shape mismatch");
    }
    for (std::size_t i = 0; i < layer.weight.data.size(); ++i) {
      double v = config.momentum * buf.weight.data[i] -
                 lr * (g.weight.data[i] +
                       config.weight_decay * layer.weight.data[i]);
      buf.weight.data[i] = v;
      layer.weight.data[i] += v;
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      double v = config.momentum * buf.bias[i] -
                 lr * (g.bias[i] + config.weight_decay * layer.bias[i]);
      buf.bias[i] = v;
      layer.bias[i] += v;
    }
  }
}

namespace {

void check_train_config(const TrainConfig& config) {
  if (config.learning_rate < 0.0) {
    throw std::runtime_error("learning_rate must be >= 0");
  }
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw std::runtime_error("momentum must be in [0, 1)");
  }
  if (config.weight_decay < 0.0) {
    throw std::runtime_error("weight_decay must be >= 0");
  }
  if (config.batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  if (config.epochs < 1) throw std::runtime_error("epochs must be >= 1");
  if (config.lr_step_epochs < 1) {
    throw std::runtime_error("lr_step_epochs must be >= 1");
  }
  if (!(config.lr_factor > 0.0) || !(config.lr_factor < 1.0)) {
    throw std::runtime_error("lr_factor must be in (0, 1)");
  }
}

}  // namespace

std::pair<ModelParams, TrainLog> train(const LabeledDataset& train_set,
                                       const LabeledDataset& val_set,
                                       const TrainConfig& config) {
  check_train_config(config);
  if (train_set.records.empty()) throw std::runtime_error("empty dataset");
  if (train_set.num_identities < 2) {
    throw std::runtime_error("need at least two identities");
  }
  // Labels must fit the head, but a class may be empty: label disturbance
  // can flip every record of an identity away without shrinking the head.
  for (const EmbeddingRecord& r : train_set.records) {
    if (r.identity < 0 || r.identity >= train_set.num_identities) {
      throw std::runtime_error("training label outside 0..C-1");
    }
  }
  for (const EmbeddingRecord& r : val_set.records) {
    if (r.identity < 0 || r.identity >= train_set.num_identities) {
      throw std::runtime_error("validation label outside training classes");
    }
  }

  ModelParams model = init_model(train_set.dim(), config.hidden_dims,
                                 train_set.num_identities, config.seed);
  TrainLog log;

  const std::size_t n = train_set.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, "shuffle",
                                static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(start + batch_size, n);
      Batch batch(order.begin() + start, order.begin() + end);
      Gradients grads = backward(model, batch, train_set);
      loss_sum += grads.mean_loss * static_cast<double>(batch.size());
      sgd_step(model, grads, config, epoch);
    }
    log.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    if (!val_set.records.empty()) {
      log.epoch_val_accuracy.push_back(
          classification_accuracy(model, val_set));
    }
  }
  return {std::move(model), std::move(log)};
}

std::vector<FeatureVector> extract_features(
    const ModelParams& model, const std::vector<EmbeddingRecord>& records) {
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const EmbeddingRecord& r : records) {
    out.push_back(forward(model, r.vector).second);
  }
  return out;
}

std::vector<FeatureVector> extract_features(
    const ModelParams& model, const std::vector<FeatureVector>& inputs) {
  std::vector<FeatureVector> out;
  out.reserve(inputs.size());
  for (const FeatureVector& x : inputs) {
    out.push_back(forward(model, x).second);
  }
  return out;
}

double classification_accuracy(const ModelParams& model,
                               const LabeledDataset& dataset) {
  if (dataset.records.empty()) {
    throw std::runtime_error("empty dataset");
  }
  std::size_t correct = 0;
  for (const EmbeddingRecord& r : dataset.records) {
    const std::vector<double> logits = forward(model, r.vector).first;
    const auto best = std::max_element(logits.begin(), logits.end());
    if (static_cast<int>(best - logits.begin()) == r.identity) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(dataset.records.size());
}

}  // namespace reid
