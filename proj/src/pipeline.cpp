#include "screenlab/pipeline.hpp"

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"

namespace screenlab {

PreparedData prepare(std::span<const ScreeningRecord> records, const SplitSpec& split) {
  const FeatureMatrix full = encode(records);
  PreparedData data;
  data.indices = split_indices(full.labels, split);
  data.train = full.select(data.indices.train);
  data.test = full.select(data.indices.test);
  return data;
}

ScoredSet score_all(const AnyModel& model, const FeatureMatrix& matrix) {
  require_same_schema(schema_of(model), matrix.schema);
  ScoredSet out;
  out.labels = matrix.labels;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const Prediction p = predict(model, matrix.row(r));
    out.predictions.push_back(p.label);
    out.scores.push_back(p.score);
  }
  return out;
}

MetricsReport evaluate(const AnyModel& model, const FeatureMatrix& matrix, Label positive_class) {
  const ScoredSet scored = score_all(model, matrix);
  return metrics(confusion(scored.labels, scored.predictions, positive_class));
}

std::uint64_t model_seed(std::uint64_t master) { return derive_seed(master, 1); }

std::string display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cart: return "CART Tree";
    case ModelKind::C45: return "C4.5 Tree";
    case ModelKind::BaggedCart: return "Bagged CART";
    case ModelKind::RandomForest: return "Random Forest";
    case ModelKind::Mlp: return "Neural Network";
  }
  return "?";
}

std::vector<CandidateResult> compare_candidates(const PreparedData& data, std::uint64_t seed,
                                                std::size_t threads) {
  std::vector<CandidateResult> results;
  for (ModelKind kind : {ModelKind::C45, ModelKind::RandomForest, ModelKind::Mlp}) {
    ModelSpec spec = ModelSpec::defaults(kind);
    spec.threads = threads;
    const AnyModel model = train_model(spec, data.train, model_seed(seed));
    results.push_back({kind, display_name(kind), evaluate(model, data.test)});
  }
  return results;
}

}  // namespace screenlab
