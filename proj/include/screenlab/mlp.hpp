#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "screenlab/data_model.hpp"

namespace screenlab {

/// Fully connected logistic layer; weights are outputs x inputs, row-major.
struct Layer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& weight(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }
  double weight(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }
  bool operator==(const Layer&) const = default;
};

double logistic(double x);

/// Per-column min/max scaling to [0, 1] fitted on training data. Constant
/// columns map to 0; inputs outside the training range are clamped.
struct Normalizer {
  std::vector<double> min;
  std::vector<double> max;

  static Normalizer fit(const FeatureMatrix& matrix);
  std::vector<double> apply(std::span<const double> row) const;
  /// Normalizes every row of `matrix` (row-major, same width).
  std::vector<double> apply_all(const FeatureMatrix& matrix) const;
  bool operator==(const Normalizer&) const = default;
};

enum class TrainAlgorithm { Rprop, GradientDescent };

struct EpochInfo {
  std::size_t epoch = 0;
  double error = 0.0;
  double max_gradient = 0.0;
  double min_step = 0.0;  // Rprop only
  double max_step = 0.0;  // Rprop only
};

struct TrainParams {
  TrainAlgorithm algorithm = TrainAlgorithm::Rprop;
  std::vector<std::size_t> hidden{5, 3};
  /// Stop once every gradient component is below this in absolute value.
  double threshold = 0.01;
  std::size_t max_epochs = 100000;
  std::uint64_t seed = 1;
  /// Independent initializations tried; the lowest final error wins.
  std::size_t restarts = 1;

  double initial_step = 0.1;
  double step_min = 1e-6;
  double step_max = 50.0;
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  /// Batch gradient descent only.
  double learning_rate = 0.01;

  /// Called after every epoch when set.
  std::function<void(const EpochInfo&)> observer;

  void validate() const;
};

struct MlpModel {
  Schema schema;
  Normalizer normalizer;
  std::vector<Layer> layers;
  TrainParams params;
  bool converged = false;
  double final_error = 0.0;
  double final_max_gradient = 0.0;
  std::size_t epochs = 0;
  std::uint64_t init_seed = 0;

  std::string kind() const { return "mlp"; }
  /// Layer widths including input and output, e.g. {p, 5, 3, 1}.
  std::vector<std::size_t> layer_sizes() const;
};

/// Seeded uniform(-0.5, 0.5) weights for widths {inputs, hidden..., 1}.
std::vector<Layer> init_layers(std::span<const std::size_t> sizes, std::uint64_t seed);

/// Output of the network on an already normalized row.
double forward(std::span<const Layer> layers, std::span<const double> normalized_row);

struct GradientResult {
  std::vector<Layer> gradient;  // same shapes as the network
  double error = 0.0;           // sum of squared errors
};

/// Exact gradient of sum (output - target)^2 over a batch. `inputs` is
/// row-major with layers.front().inputs columns; one target per row.
GradientResult gradient(std::span<const Layer> layers, std::span<const double> inputs,
                        std::span<const double> targets);

/// Trains on normalized inputs with Yes -> 1, No -> 0. Non-convergence is not
/// an error: the model comes back with converged = false.
MlpModel fit_mlp(const FeatureMatrix& train, const TrainParams& params);

/// Network score of a raw (unnormalized) row.
double score_mlp(const MlpModel& model, std::span<const double> row);

/// Yes iff score >= 0.5.
Prediction predict_mlp(const MlpModel& model, std::span<const double> row);
Label label_for_score(double score);

}  // namespace screenlab
