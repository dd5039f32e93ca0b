#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "screenlab/data_model.hpp"
#include "screenlab/ensemble.hpp"
#include "screenlab/mlp.hpp"
#include "screenlab/tree.hpp"

namespace screenlab {

enum class ModelKind { Cart, C45, BaggedCart, RandomForest, Mlp };

std::string_view to_string(ModelKind kind);
/// "cart", "c45", "bagcart", "rf" or "mlp".
ModelKind parse_model_kind(std::string_view text);

using AnyModel = std::variant<TreeModel, EnsembleModel, MlpModel>;

/// What to train and how. Params not relevant to `kind` are ignored.
struct ModelSpec {
  ModelKind kind = ModelKind::C45;
  TreeParams tree = TreeParams::c45();
  /// Ensemble params; mtry and n_trees fall back to the family defaults when unset.
  std::optional<std::size_t> n_trees;
  std::optional<std::size_t> mtry;
  TreeParams forest_tree = EnsembleParams::forest_tree_params();
  std::size_t threads = 0;
  TrainParams mlp;

  /// Family defaults for `kind`.
  static ModelSpec defaults(ModelKind kind);
};

/// Fits the model described by `spec`; every random choice derives from `seed`.
AnyModel train_model(const ModelSpec& spec, const FeatureMatrix& train, std::uint64_t seed);

Prediction predict(const AnyModel& model, std::span<const double> row);
const Schema& schema_of(const AnyModel& model);
ModelKind kind_of(const AnyModel& model);

}  // namespace screenlab
