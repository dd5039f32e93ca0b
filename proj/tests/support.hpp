#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "screenlab/mlp.hpp"
#include "screenlab/random.hpp"
#include "screenlab/synth.hpp"

namespace screenlab::testing {

// Encoded synthetic records; the label is the sum > 3 rule by construction.
inline FeatureMatrix oracle_data(std::size_t n, std::uint64_t seed, double prevalence = 0.69) {
  return encode(generate({n, seed, prevalence}));
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
};

// Compares the analytic gradient against central differences of the SSE.
// Relative error uses a 1e-6 floor so that vanishing components do not
// amplify rounding noise.
inline GradientCheck check_gradient(std::vector<Layer> layers, const std::vector<double>& inputs,
                                    const std::vector<double>& targets, double h = 1e-5) {
  const GradientResult analytic = gradient(layers, inputs, targets);
  const std::size_t p = layers.front().inputs;
  auto sse = [&]() {
    double total = 0.0;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      const double out = forward(layers, std::span<const double>(inputs.data() + r * p, p));
      total += (out - targets[r]) * (out - targets[r]);
    }
    return total;
  };
  GradientCheck check;
  auto compare = [&](double& param, double exact) {
    const double saved = param;
    param = saved + h;
    const double up = sse();
    param = saved - h;
    const double down = sse();
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::fabs(exact), std::fabs(numeric), 1e-6});
    check.max_relative_error = std::max(check.max_relative_error, std::fabs(exact - numeric) / scale);
    ++check.parameters;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weights.size(); ++i) compare(layers[l].weights[i], analytic.gradient[l].weights[i]);
    for (std::size_t i = 0; i < layers[l].biases.size(); ++i) compare(layers[l].biases[i], analytic.gradient[l].biases[i]);
  }
  return check;
}

// Gradient check on one seeded network of widths {p, 5, 3, 1}. Weights are
// widened to uniform(-2, 2) so some units sit near saturation.
inline GradientCheck random_gradient_check(std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::size_t> sizes{p, 5, 3, 1};
  std::vector<Layer> layers = init_layers(sizes, derive_seed(seed, 1));
  for (auto& layer : layers) {
    for (auto& w : layer.weights) w *= 4.0;
    for (auto& b : layer.biases) b *= 4.0;
  }
  const std::size_t batch = 1 + rng.index(12);
  std::vector<double> inputs(batch * p);
  for (auto& x : inputs) x = rng.uniform(0.0, 1.0);
  std::vector<double> targets(batch);
  for (auto& t : targets) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return check_gradient(std::move(layers), inputs, targets);
}

// Probability that a random positive outscores a random negative, ties 1/2.
inline double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace screenlab::testing
