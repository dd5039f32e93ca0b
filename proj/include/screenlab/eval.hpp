#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "screenlab/data_model.hpp"
#include "screenlab/model.hpp"

namespace screenlab {

/// 2x2 counts relative to `positive_class`.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  Label positive_class = Label::Yes;

  std::size_t total() const { return tp + fn + fp + tn; }
  /// Same predictions viewed with the other class as positive.
  ConfusionMatrix flipped() const { return {tn, fp, fn, tp, other(positive_class)}; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> labels, std::span<const Label> predictions,
                          Label positive_class = Label::Yes);

/// The caret-style statistic block. Fields whose denominator is zero are empty.
struct MetricsReport {
  ConfusionMatrix cm;
  std::optional<double> accuracy;
  std::optional<double> ci95_low;
  std::optional<double> ci95_high;
  std::optional<double> nir;
  std::optional<double> p_value_acc_gt_nir;
  std::optional<double> kappa;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> ppv;
  std::optional<double> npv;
  std::optional<double> prevalence;
  std::optional<double> detection_rate;
  std::optional<double> detection_prevalence;
  std::optional<double> balanced_accuracy;
  Label positive_class = Label::Yes;
};

/// Throws ValidationError on an empty matrix.
MetricsReport metrics(const ConfusionMatrix& cm);

/// "<2e-16" below 1e-16, otherwise four significant digits.
std::string format_p_value(double p);
/// Fixed text block: the confusion matrix, then every statistic in report order.
std::string format_report(const MetricsReport& report);
/// One `key=value` line per field; undefined fields print `NA`.
std::string format_key_values(const MetricsReport& report);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1)
  double auc = 0.0;
};

/// Threshold sweep over distinct scores, highest first; equal scores form one
/// step. AUC by the trapezoid rule. Needs both classes and finite scores.
RocCurve roc(std::span<const Label> labels, std::span<const double> scores,
             Label positive_class = Label::Yes);
/// `fpr,tpr,threshold` lines after a header.
std::string format_roc_csv(const RocCurve& curve);

struct CvResult {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_of_row;
};

/// Stratified fold id per row: each class is shuffled and dealt round-robin,
/// continuing across classes, so fold sizes and per-class counts differ by at most one.
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k,
                                          std::uint64_t seed);

using RowClassifier = std::function<Label(std::span<const double>)>;
/// Trains on one fold's training rows; the seed is derived per fold.
using FoldTrainer = std::function<RowClassifier(const FeatureMatrix&, std::uint64_t)>;

CvResult cross_validate(const FeatureMatrix& matrix, const FoldTrainer& trainer, std::size_t k,
                        std::uint64_t seed);
CvResult cross_validate(const FeatureMatrix& matrix, const ModelSpec& spec, std::size_t k,
                        std::uint64_t seed);

/// Shares of each category within each label and overall ("All").
struct EdaSummary {
  std::size_t total = 0;
  std::map<std::string, std::size_t> label_counts;
  std::map<std::string, std::map<std::string, double>> sex_share;        // label -> sex -> share
  std::map<std::string, std::map<std::string, double>> ethnicity_share;  // label -> ethnicity -> share
};

/// Throws ValidationError on an empty record list.
EdaSummary eda_summary(std::span<const ScreeningRecord> records);
std::string format_eda(const EdaSummary& summary);
std::string format_eda_key_values(const EdaSummary& summary);

struct ComparisonRow {
  std::string model;
  MetricsReport report;
};

/// Table with Accuracy, Sensitivity and Specificity columns.
std::string format_comparison(std::span<const ComparisonRow> rows);

}  // namespace screenlab
