#include "screenlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"
#include "screenlab/stats.hpp"

namespace screenlab {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::string fixed4(const std::optional<double>& value) {
  if (!value) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *value);
  return buf;
}

std::string full(const std::optional<double>& value) {
  if (!value) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *value);
  return buf;
}

std::string pad_left(const std::string& text, std::size_t width) {
  return text.size() >= width ? text : std::string(width - text.size(), ' ') + text;
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> labels, std::span<const Label> predictions,
                          Label positive_class) {
  if (labels.size() != predictions.size()) {
    throw ValidationError("labels and predictions differ in length (" +
                          std::to_string(labels.size()) + " vs " +
                          std::to_string(predictions.size()) + ")");
  }
  if (labels.empty()) throw ValidationError("confusion matrix of zero predictions");
  ConfusionMatrix cm;
  cm.positive_class = positive_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == positive_class;
    const bool called = predictions[i] == positive_class;
    if (actual && called) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (called) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("metrics of an empty confusion matrix");
  const double tp = static_cast<double>(cm.tp);
  const double fn = static_cast<double>(cm.fn);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);
  const double n = static_cast<double>(cm.total());
  const std::size_t correct = cm.tp + cm.tn;

  MetricsReport r;
  r.cm = cm;
  r.positive_class = cm.positive_class;
  r.accuracy = (tp + tn) / n;
  const auto [low, high] = stats::clopper_pearson(correct, cm.total());
  r.ci95_low = low;
  r.ci95_high = high;
  r.prevalence = (tp + fn) / n;
  r.nir = std::max(*r.prevalence, 1.0 - *r.prevalence);
  if (*r.nir < 1.0) r.p_value_acc_gt_nir = stats::nir_test(correct, cm.total(), *r.nir);

  const double expected = ((tp + fn) * (tp + fp) + (fp + tn) * (fn + tn)) / (n * n);
  if (expected < 1.0) r.kappa = (*r.accuracy - expected) / (1.0 - expected);

  r.sensitivity = ratio(tp, tp + fn);
  r.specificity = ratio(tn, tn + fp);
  r.ppv = ratio(tp, tp + fp);
  r.npv = ratio(tn, tn + fn);
  r.detection_rate = tp / n;
  r.detection_prevalence = (tp + fp) / n;
  if (r.sensitivity && r.specificity) r.balanced_accuracy = (*r.sensitivity + *r.specificity) / 2.0;
  return r;
}

std::string format_p_value(double p) {
  if (p < 1e-16) return "<2e-16";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", p);
  return buf;
}

std::string format_report(const MetricsReport& r) {
  const ConfusionMatrix& cm = r.cm;
  // Rows are predictions, columns the reference, both in No, Yes order.
  std::size_t cell[2][2];
  const int pos = static_cast<int>(cm.positive_class);
  const int neg = 1 - pos;
  cell[pos][pos] = cm.tp;
  cell[neg][pos] = cm.fn;
  cell[pos][neg] = cm.fp;
  cell[neg][neg] = cm.tn;

  std::ostringstream out;
  out << "Confusion Matrix and Statistics\n\n";
  out << "          Reference\n";
  out << "Prediction" << pad_left("No", 6) << pad_left("Yes", 6) << "\n";
  for (int predicted : {0, 1}) {
    out << pad_left(std::string(to_string(static_cast<Label>(predicted))), 10)
        << pad_left(std::to_string(cell[predicted][0]), 6)
        << pad_left(std::to_string(cell[predicted][1]), 6) << "\n";
  }
  out << "\n";
  auto line = [&out](const std::string& name, const std::string& value) {
    out << pad_left(name, 23) << " : " << value << "\n";
  };
  line("Accuracy", fixed4(r.accuracy));
  line("95% CI", "(" + fixed4(r.ci95_low) + ", " + fixed4(r.ci95_high) + ")");
  line("No Information Rate", fixed4(r.nir));
  line("P-Value [Acc > NIR]", r.p_value_acc_gt_nir ? format_p_value(*r.p_value_acc_gt_nir) : "NA");
  out << "\n";
  line("Kappa", fixed4(r.kappa));
  out << "\n";
  line("Sensitivity", fixed4(r.sensitivity));
  line("Specificity", fixed4(r.specificity));
  line("Pos Pred Value", fixed4(r.ppv));
  line("Neg Pred Value", fixed4(r.npv));
  line("Prevalence", fixed4(r.prevalence));
  line("Detection Rate", fixed4(r.detection_rate));
  line("Detection Prevalence", fixed4(r.detection_prevalence));
  line("Balanced Accuracy", fixed4(r.balanced_accuracy));
  out << "\n";
  line("'Positive' Class", std::string(to_string(r.positive_class)));
  return out.str();
}

std::string format_key_values(const MetricsReport& r) {
  std::ostringstream out;
  out << "tp=" << r.cm.tp << "\nfn=" << r.cm.fn << "\nfp=" << r.cm.fp << "\ntn=" << r.cm.tn << "\n";
  out << "accuracy=" << full(r.accuracy) << "\n";
  out << "ci95_low=" << full(r.ci95_low) << "\n";
  out << "ci95_high=" << full(r.ci95_high) << "\n";
  out << "nir=" << full(r.nir) << "\n";
  out << "p_value_acc_gt_nir=" << full(r.p_value_acc_gt_nir) << "\n";
  out << "kappa=" << full(r.kappa) << "\n";
  out << "sensitivity=" << full(r.sensitivity) << "\n";
  out << "specificity=" << full(r.specificity) << "\n";
  out << "ppv=" << full(r.ppv) << "\n";
  out << "npv=" << full(r.npv) << "\n";
  out << "prevalence=" << full(r.prevalence) << "\n";
  out << "detection_rate=" << full(r.detection_rate) << "\n";
  out << "detection_prevalence=" << full(r.detection_prevalence) << "\n";
  out << "balanced_accuracy=" << full(r.balanced_accuracy) << "\n";
  out << "positive_class=" << to_string(r.positive_class) << "\n";
  return out.str();
}

RocCurve roc(std::span<const Label> labels, std::span<const double> scores, Label positive_class) {
  if (labels.size() != scores.size()) throw ValidationError("labels and scores differ in length");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError("ROC scores must be finite");
    if (labels[i] == positive_class) ++positives;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw ValidationError("ROC needs both classes present");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      if (labels[order[i]] == positive_class) ++tp; else ++fp;
    }
    const RocPoint point{threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                         static_cast<double>(tp) / static_cast<double>(positives)};
    const RocPoint& prev = curve.points.back();
    curve.auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
    curve.points.push_back(point);
  }
  return curve;
}

std::string format_roc_csv(const RocCurve& curve) {
  std::ostringstream out;
  out << "fpr,tpr,threshold\n";
  char buf[96];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.fpr, p.tpr, p.threshold);
    out << buf;
  }
  return out.str();
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k,
                                          std::uint64_t seed) {
  if (k < 2) throw ValidationError("cross-validation needs k >= 2");
  if (labels.size() < k) throw ValidationError("cross-validation needs at least k rows");
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t position = 0;
  for (Label cls : {Label::Yes, Label::No}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t i : members) fold[i] = position++ % k;
  }
  return fold;
}

CvResult cross_validate(const FeatureMatrix& matrix, const FoldTrainer& trainer, std::size_t k,
                        std::uint64_t seed) {
  CvResult result;
  result.seed = seed;
  result.fold_of_row = stratified_folds(matrix.labels, k, seed);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> held_out;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      (result.fold_of_row[r] == f ? held_out : train_rows).push_back(r);
    }
    const RowClassifier classify = trainer(matrix.select(train_rows), derive_seed(seed, f));
    std::size_t correct = 0;
    for (std::size_t r : held_out) {
      if (classify(matrix.row(r)) == matrix.labels[r]) ++correct;
    }
    result.fold_accuracies.push_back(static_cast<double>(correct) /
                                     static_cast<double>(held_out.size()));
  }
  const double kd = static_cast<double>(k);
  result.mean = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) / kd;
  double ss = 0.0;
  for (double a : result.fold_accuracies) ss += (a - result.mean) * (a - result.mean);
  result.sd = std::sqrt(ss / (kd - 1.0));
  return result;
}

CvResult cross_validate(const FeatureMatrix& matrix, const ModelSpec& spec, std::size_t k,
                        std::uint64_t seed) {
  return cross_validate(
      matrix,
      [&spec](const FeatureMatrix& train, std::uint64_t fold_seed) -> RowClassifier {
        auto model = std::make_shared<AnyModel>(train_model(spec, train, fold_seed));
        return [model](std::span<const double> row) { return predict(*model, row).label; };
      },
      k, seed);
}

EdaSummary eda_summary(std::span<const ScreeningRecord> records) {
  if (records.empty()) throw ValidationError("EDA of an empty record list");
  EdaSummary summary;
  summary.total = records.size();
  std::map<std::string, std::map<std::string, std::size_t>> sex_counts;
  std::map<std::string, std::map<std::string, std::size_t>> ethnicity_counts;
  for (const auto& record : records) {
    const std::string label(to_string(record.label));
    for (const std::string& key : {label, std::string("All")}) {
      ++summary.label_counts[key];
      ++sex_counts[key][std::string(to_string(record.sex))];
      ++ethnicity_counts[key][record.ethnicity];
    }
  }
  auto shares = [&summary](const auto& counts, auto& target) {
    for (const auto& [label, per] : counts) {
      const double n = static_cast<double>(summary.label_counts.at(label));
      for (const auto& [category, count] : per) {
        target[label][category] = static_cast<double>(count) / n;
      }
    }
  };
  shares(sex_counts, summary.sex_share);
  shares(ethnicity_counts, summary.ethnicity_share);
  return summary;
}

std::string format_eda(const EdaSummary& summary) {
  std::ostringstream out;
  auto percent = [](const std::map<std::string, std::map<std::string, double>>& shares,
                    const std::string& label, const std::string& category) {
    auto it = shares.find(label);
    double v = 0.0;
    if (it != shares.end()) {
      auto jt = it->second.find(category);
      if (jt != it->second.end()) v = jt->second;
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
    return std::string(buf);
  };
  auto table = [&](const char* title, const auto& shares) {
    out << title << "\n";
    out << pad_left("", 20) << pad_left("ASD traits", 14) << pad_left("No ASD traits", 15)
        << pad_left("Totals", 10) << "\n";
    const auto& all = shares.at("All");
    for (const auto& [category, share] : all) {
      (void)share;
      out << pad_left(category, 20) << pad_left(percent(shares, "Yes", category), 14)
          << pad_left(percent(shares, "No", category), 15)
          << pad_left(percent(shares, "All", category), 10) << "\n";
    }
    out << pad_left("Totals", 20) << pad_left(summary.label_counts.count("Yes") ? "100%" : "-", 14)
        << pad_left(summary.label_counts.count("No") ? "100%" : "-", 15) << pad_left("100%", 10)
        << "\n\n";
  };
  out << "Records: " << summary.total;
  for (const auto& [label, count] : summary.label_counts) {
    if (label != "All") out << "  " << label << "=" << count;
  }
  out << "\n\n";
  table("Sex by class", summary.sex_share);
  table("Ethnicity by class", summary.ethnicity_share);
  return out.str();
}

std::string format_eda_key_values(const EdaSummary& summary) {
  std::ostringstream out;
  out << "total=" << summary.total << "\n";
  for (const auto& [label, count] : summary.label_counts) out << "count." << label << "=" << count << "\n";
  char buf[32];
  for (const auto& [label, per] : summary.sex_share) {
    for (const auto& [category, share] : per) {
      std::snprintf(buf, sizeof buf, "%.17g", share);
      out << "sex." << label << "." << category << "=" << buf << "\n";
    }
  }
  for (const auto& [label, per] : summary.ethnicity_share) {
    for (const auto& [category, share] : per) {
      std::snprintf(buf, sizeof buf, "%.17g", share);
      out << "ethnicity." << label << "." << category << "=" << buf << "\n";
    }
  }
  return out.str();
}

std::string format_comparison(std::span<const ComparisonRow> rows) {
  std::ostringstream out;
  out << "Model" << std::string(15, ' ') << pad_left("Accuracy", 10) << pad_left("Sensitivity", 13)
      << pad_left("Specificity", 13) << "\n";
  for (const auto& row : rows) {
    std::string name = row.model;
    if (name.size() < 20) name += std::string(20 - name.size(), ' ');
    out << name << pad_left(fixed4(row.report.accuracy), 10)
        << pad_left(fixed4(row.report.sensitivity), 13)
        << pad_left(fixed4(row.report.specificity), 13) << "\n";
  }
  return out.str();
}

}  // namespace screenlab
