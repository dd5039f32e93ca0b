#include "screenlab/model.hpp"

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"

namespace screenlab {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cart: return "cart";
    case ModelKind::C45: return "c45";
    case ModelKind::BaggedCart: return "bagcart";
    case ModelKind::RandomForest: return "rf";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "cart") return ModelKind::Cart;
  if (text == "c45") return ModelKind::C45;
  if (text == "bagcart") return ModelKind::BaggedCart;
  if (text == "rf") return ModelKind::RandomForest;
  if (text == "mlp") return ModelKind::Mlp;
  throw ValidationError("unknown model kind '" + std::string(text) +
                        "' (expected cart, c45, bagcart, rf or mlp)");
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.tree = kind == ModelKind::Cart ? TreeParams::cart() : TreeParams::c45();
  return spec;
}

AnyModel train_model(const ModelSpec& spec, const FeatureMatrix& train, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::Cart:
    case ModelKind::C45: {
      TreeParams params = spec.tree;
      params.criterion = spec.kind == ModelKind::Cart ? Criterion::Gini : Criterion::GainRatio;
      return fit_tree(train, params);
    }
    case ModelKind::BaggedCart:
    case ModelKind::RandomForest: {
      EnsembleParams params = spec.kind == ModelKind::RandomForest
                                  ? EnsembleParams::random_forest(train.cols(), seed)
                                  : EnsembleParams::bagging(seed);
      if (spec.n_trees) params.n_trees = *spec.n_trees;
      if (spec.kind == ModelKind::RandomForest && spec.mtry) params.mtry = *spec.mtry;
      params.base = spec.forest_tree;
      params.threads = spec.threads;
      return fit_ensemble(train, params);
    }
    case ModelKind::Mlp: {
      TrainParams params = spec.mlp;
      params.seed = seed;
      return fit_mlp(train, params);
    }
  }
  throw ValidationError("unknown model kind");
}

Prediction predict(const AnyModel& model, std::span<const double> row) {
  struct Visitor {
    std::span<const double> row;
    Prediction operator()(const TreeModel& m) const { return predict_tree(m, row); }
    Prediction operator()(const EnsembleModel& m) const { return predict_ensemble(m, row); }
    Prediction operator()(const MlpModel& m) const { return predict_mlp(m, row); }
  };
  return std::visit(Visitor{row}, model);
}

const Schema& schema_of(const AnyModel& model) {
  return std::visit([](const auto& m) -> const Schema& { return m.schema; }, model);
}

ModelKind kind_of(const AnyModel& model) {
  return std::visit([](const auto& m) { return parse_model_kind(m.kind()); }, model);
}

}  // namespace screenlab
