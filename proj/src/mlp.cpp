#include "screenlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"

namespace screenlab {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Normalizer Normalizer::fit(const FeatureMatrix& matrix) {
  Normalizer norm;
  const std::size_t p = matrix.cols();
  norm.min.assign(p, std::numeric_limits<double>::infinity());
  norm.max.assign(p, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      norm.min[c] = std::min(norm.min[c], matrix.at(r, c));
      norm.max[c] = std::max(norm.max[c], matrix.at(r, c));
    }
  }
  return norm;
}

std::vector<double> Normalizer::apply(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) {
    const double range = max[c] - min[c];
    out[c] = range > 0.0 ? std::clamp((row[c] - min[c]) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

std::vector<double> Normalizer::apply_all(const FeatureMatrix& matrix) const {
  std::vector<double> out;
  out.reserve(matrix.values.size());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = apply(matrix.row(r));
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

void TrainParams::validate() const {
  if (!(threshold > 0.0)) throw ValidationError("threshold must be > 0");
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
  if (hidden.empty()) throw ValidationError("at least one hidden layer is required");
  for (std::size_t width : hidden) {
    if (width < 1) throw ValidationError("hidden layer widths must be >= 1");
  }
  if (!(step_min > 0.0 && step_min <= initial_step && initial_step <= step_max)) {
    throw ValidationError("Rprop steps must satisfy 0 < step_min <= initial_step <= step_max");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
}

std::vector<std::size_t> MlpModel::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().inputs);
  for (const auto& layer : layers) sizes.push_back(layer.outputs);
  return sizes;
}

std::vector<Layer> init_layers(std::span<const std::size_t> sizes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Layer layer;
    layer.inputs = sizes[i];
    layer.outputs = sizes[i + 1];
    layer.weights.resize(layer.inputs * layer.outputs);
    layer.biases.resize(layer.outputs);
    for (auto& w : layer.weights) w = rng.uniform(-0.5, 0.5);
    for (auto& b : layer.biases) b = rng.uniform(-0.5, 0.5);
    layers.push_back(std::move(layer));
  }
  return layers;
}

namespace {

// Activations of every layer for one row; activations[0] is the input.
void forward_all(std::span<const Layer> layers, std::span<const double> input,
                 std::vector<std::vector<double>>& activations) {
  activations.resize(layers.size() + 1);
  activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    auto& out = activations[l + 1];
    out.resize(layer.outputs);
    const auto& in = activations[l];
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double z = layer.biases[o];
      const double* w = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
      out[o] = logistic(z);
    }
  }
}

std::vector<Layer> zeros_like(std::span<const Layer> layers) {
  std::vector<Layer> out(layers.begin(), layers.end());
  for (auto& layer : out) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
  }
  return out;
}

double max_abs(std::span<const Layer> layers) {
  double m = 0.0;
  for (const auto& layer : layers) {
    for (double w : layer.weights) m = std::max(m, std::fabs(w));
    for (double b : layer.biases) m = std::max(m, std::fabs(b));
  }
  return m;
}

// Applies `update(param, grad, state...)` elementwise across matching shapes.
template <typename Fn>
void for_each_parameter(std::vector<Layer>& params, const std::vector<Layer>& grads,
                        std::vector<Layer>& a, std::vector<Layer>& b, Fn&& update) {
  for (std::size_t l = 0; l < params.size(); ++l) {
    for (std::size_t i = 0; i < params[l].weights.size(); ++i) {
      update(params[l].weights[i], grads[l].weights[i], a[l].weights[i], b[l].weights[i]);
    }
    for (std::size_t i = 0; i < params[l].biases.size(); ++i) {
      update(params[l].biases[i], grads[l].biases[i], a[l].biases[i], b[l].biases[i]);
    }
  }
}

MlpModel train_once(const FeatureMatrix& train, const Normalizer& normalizer,
                    const std::vector<double>& inputs, const std::vector<double>& targets,
                    const TrainParams& params, std::uint64_t seed) {
  std::vector<std::size_t> sizes{train.cols()};
  sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
  sizes.push_back(1);

  MlpModel model;
  model.schema = train.schema;
  model.normalizer = normalizer;
  model.params = params;
  model.params.observer = nullptr;
  model.init_seed = seed;
  model.layers = init_layers(sizes, seed);

  std::vector<Layer> steps = zeros_like(model.layers);
  std::vector<Layer> previous = zeros_like(model.layers);
  for (auto& layer : steps) {
    std::fill(layer.weights.begin(), layer.weights.end(), params.initial_step);
    std::fill(layer.biases.begin(), layer.biases.end(), params.initial_step);
  }

  for (std::size_t epoch = 1; epoch <= params.max_epochs; ++epoch) {
    GradientResult result = gradient(model.layers, inputs, targets);
    if (!std::isfinite(result.error)) {
      throw std::runtime_error("training error became non-finite at epoch " + std::to_string(epoch));
    }
    model.final_error = result.error;
    model.final_max_gradient = max_abs(result.gradient);
    model.epochs = epoch - 1;
    if (model.final_max_gradient < params.threshold) {
      model.converged = true;
      break;
    }

    EpochInfo info{epoch, result.error, model.final_max_gradient,
                   std::numeric_limits<double>::infinity(), 0.0};
    if (params.algorithm == TrainAlgorithm::Rprop) {
      // iRprop-: on a sign change shrink the step and skip this update.
      for_each_parameter(model.layers, result.gradient, steps, previous,
                         [&](double& w, double g, double& step, double& prev) {
                           const double direction = g * prev;
                           if (direction > 0.0) {
                             step = std::min(step * params.eta_plus, params.step_max);
                           } else if (direction < 0.0) {
                             step = std::max(step * params.eta_minus, params.step_min);
                             g = 0.0;
                           }
                           if (g > 0.0) w -= step;
                           else if (g < 0.0) w += step;
                           prev = g;
                           info.min_step = std::min(info.min_step, step);
                           info.max_step = std::max(info.max_step, step);
                         });
    } else {
      for_each_parameter(model.layers, result.gradient, steps, previous,
                         [&](double& w, double g, double&, double&) { w -= params.learning_rate * g; });
      info.min_step = info.max_step = params.learning_rate;
    }
    model.epochs = epoch;
    if (params.observer) params.observer(info);
  }
  if (!model.converged) {
    const GradientResult last = gradient(model.layers, inputs, targets);
    model.final_error = last.error;
    model.final_max_gradient = max_abs(last.gradient);
    model.converged = model.final_max_gradient < params.threshold;
  }
  return model;
}

}  // namespace

double forward(std::span<const Layer> layers, std::span<const double> normalized_row) {
  if (layers.empty() || normalized_row.size() != layers.front().inputs) {
    throw SchemaMismatch("input width does not match the network");
  }
  std::vector<std::vector<double>> activations;
  forward_all(layers, normalized_row, activations);
  return activations.back()[0];
}

GradientResult gradient(std::span<const Layer> layers, std::span<const double> inputs,
                        std::span<const double> targets) {
  if (targets.empty()) throw ValidationError("gradient of an empty batch");
  const std::size_t p = layers.front().inputs;
  if (inputs.size() != targets.size() * p) throw SchemaMismatch("batch width does not match the network");

  GradientResult result{zeros_like(layers), 0.0};
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> deltas(layers.size());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    forward_all(layers, inputs.subspan(r * p, p), activations);
    const double output = activations.back()[0];
    const double residual = output - targets[r];
    result.error += residual * residual;

    // delta = dE/dz for each unit, walking back from the output.
    deltas.back().assign(1, 2.0 * residual * output * (1.0 - output));
    for (std::size_t l = layers.size() - 1; l > 0; --l) {
      const Layer& above = layers[l];
      const auto& act = activations[l];
      auto& delta = deltas[l - 1];
      delta.assign(above.inputs, 0.0);
      for (std::size_t o = 0; o < above.outputs; ++o) {
        const double d = deltas[l][o];
        const double* w = above.weights.data() + o * above.inputs;
        for (std::size_t i = 0; i < above.inputs; ++i) delta[i] += w[i] * d;
      }
      for (std::size_t i = 0; i < above.inputs; ++i) delta[i] *= act[i] * (1.0 - act[i]);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Layer& grad = result.gradient[l];
      const auto& in = activations[l];
      for (std::size_t o = 0; o < grad.outputs; ++o) {
        const double d = deltas[l][o];
        grad.biases[o] += d;
        double* g = grad.weights.data() + o * grad.inputs;
        for (std::size_t i = 0; i < grad.inputs; ++i) g[i] += d * in[i];
      }
    }
  }
  return result;
}

MlpModel fit_mlp(const FeatureMatrix& train, const TrainParams& params) {
  params.validate();
  if (train.rows() == 0) throw ValidationError("cannot fit a network on an empty training set");
  const Normalizer normalizer = Normalizer::fit(train);
  const std::vector<double> inputs = normalizer.apply_all(train);
  std::vector<double> targets;
  targets.reserve(train.rows());
  for (Label label : train.labels) targets.push_back(label == Label::Yes ? 1.0 : 0.0);

  MlpModel best;
  for (std::size_t attempt = 0; attempt < params.restarts; ++attempt) {
    const std::uint64_t seed = attempt == 0 ? params.seed : derive_seed(params.seed, attempt);
    MlpModel candidate = train_once(train, normalizer, inputs, targets, params, seed);
    if (attempt == 0 || candidate.final_error < best.final_error) best = std::move(candidate);
  }
  return best;
}

double score_mlp(const MlpModel& model, std::span<const double> row) {
  if (row.size() != model.schema.size()) {
    throw SchemaMismatch("row has " + std::to_string(row.size()) + " columns, model expects " +
                         std::to_string(model.schema.size()));
  }
  return forward(model.layers, model.normalizer.apply(row));
}

Label label_for_score(double score) { return score >= 0.5 ? Label::Yes : Label::No; }

Prediction predict_mlp(const MlpModel& model, std::span<const double> row) {
  const double score = score_mlp(model, row);
  return {label_for_score(score), score};
}

}  // namespace screenlab
