#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "screenlab/data_model.hpp"
#include "screenlab/tree.hpp"

namespace screenlab {

struct EnsembleParams {
  std::size_t n_trees = 50;
  /// Columns sampled per node. Absent means plain bagging.
  std::optional<std::size_t> mtry;
  std::uint64_t seed = 1;
  TreeParams base = forest_tree_params();
  /// Test hook: false trains every tree on the full training set in order.
  bool bootstrap = true;
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  std::size_t threads = 0;

  /// Unpruned CART with min_leaf 1.
  static TreeParams forest_tree_params();
  /// 50 bootstrap CART trees.
  static EnsembleParams bagging(std::uint64_t seed);
  /// 500 trees, mtry = floor(sqrt(columns)).
  static EnsembleParams random_forest(std::size_t columns, std::uint64_t seed);
  void validate(std::size_t columns) const;
};

struct EnsembleModel {
  Schema schema;
  EnsembleParams params;
  std::vector<TreeModel> trees;
  /// Majority-vote accuracy over rows left out of at least one bootstrap sample.
  std::optional<double> oob_accuracy;

  std::string kind() const { return params.mtry ? "rf" : "bagcart"; }
};

/// n draws with replacement from 0..n-1.
std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed);

/// Seed of tree `index`: a fixed function of the master seed and the index,
/// so parallel and sequential fits agree tree by tree.
std::uint64_t tree_seed(std::uint64_t master, std::size_t index);

EnsembleModel fit_ensemble(const FeatureMatrix& train, const EnsembleParams& params);

/// Majority vote; score is the fraction of trees voting Yes; ties go to Yes.
Prediction predict_ensemble(const EnsembleModel& model, std::span<const double> row);

}  // namespace screenlab
