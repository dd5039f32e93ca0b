#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "screenlab/data_model.hpp"
#include "screenlab/eval.hpp"
#include "screenlab/model.hpp"

namespace screenlab {

/// Encoded dataset split into train and test. The schema comes from all
/// records so every test row has a known category.
struct PreparedData {
  FeatureMatrix train;
  FeatureMatrix test;
  SplitIndices indices;
};

PreparedData prepare(std::span<const ScreeningRecord> records, const SplitSpec& split);

/// Labels, hard calls and Yes scores of `model` on every row of `matrix`.
struct ScoredSet {
  std::vector<Label> labels;
  std::vector<Label> predictions;
  std::vector<double> scores;
};
ScoredSet score_all(const AnyModel& model, const FeatureMatrix& matrix);

/// Confusion matrix and metrics of `model` on `matrix`.
MetricsReport evaluate(const AnyModel& model, const FeatureMatrix& matrix,
                       Label positive_class = Label::Yes);

/// Seed used to train models from a run's master seed; the split uses the master seed itself.
std::uint64_t model_seed(std::uint64_t master);

struct CandidateResult {
  ModelKind kind;
  std::string name;
  MetricsReport report;
};

/// Trains the three shortlisted families (C4.5, random forest, network) on
/// `data.train` and scores each on `data.test`.
std::vector<CandidateResult> compare_candidates(const PreparedData& data, std::uint64_t seed,
                                                std::size_t threads = 0);

std::string display_name(ModelKind kind);

}  // namespace screenlab
