#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "screenlab/error.hpp"
#include "screenlab/eval.hpp"
#include "screenlab/synth.hpp"
#include "support.hpp"

using namespace screenlab;
using screenlab::testing::mann_whitney_auc;
using screenlab::testing::oracle_data;

namespace {

// Four-decimal agreement with a printed value.
void check4(const std::optional<double>& value, double printed) {
  REQUIRE(value.has_value());
  CHECK(std::fabs(*value - printed) <= 0.00005 + 1e-12);
}

// Rule label straight from the item columns; these lead every schema.
Label sum_rule(std::span<const double> row) {
  double sum = 0.0;
  for (std::size_t c = 0; c < kItemCount; ++c) sum += row[c];
  return sum > 3 ? Label::Yes : Label::No;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<Label> labels{Label::Yes, Label::Yes, Label::No};
  const std::vector<Label> preds{Label::Yes, Label::No, Label::No};
  const ConfusionMatrix cm = confusion(labels, preds);
  CHECK(cm == ConfusionMatrix{1, 1, 0, 1, Label::Yes});
  CHECK(confusion(labels, preds, Label::No) == cm.flipped());
  CHECK(confusion(labels, labels).fn == 0);
  CHECK(confusion(labels, labels).fp == 0);
  CHECK_THROWS_AS(confusion(labels, std::vector<Label>{Label::Yes}), ValidationError);
  CHECK_THROWS_AS(confusion(std::vector<Label>{}, std::vector<Label>{}), ValidationError);
}

TEST_CASE("random forest test block") {
  const MetricsReport r = metrics({218, 0, 12, 85, Label::Yes});
  check4(r.accuracy, 0.9619);
  check4(r.ci95_low, 0.9344);
  check4(r.ci95_high, 0.9802);
  check4(r.nir, 0.6921);
  check4(r.kappa, 0.9074);
  check4(r.sensitivity, 1.0);
  check4(r.specificity, 0.8763);
  check4(r.ppv, 0.9478);
  check4(r.npv, 1.0);
  check4(r.prevalence, 0.6921);
  check4(r.detection_rate, 0.6921);
  check4(r.detection_prevalence, 0.7302);
  check4(r.balanced_accuracy, 0.9381);
  CHECK(*r.p_value_acc_gt_nir < 2e-16);
}

TEST_CASE("network test block with No as the positive class") {
  const MetricsReport r = metrics({95, 2, 0, 218, Label::No});
  check4(r.accuracy, 0.9937);
  check4(r.ci95_low, 0.9773);
  check4(r.ci95_high, 0.9992);
  check4(r.nir, 0.6921);
  check4(r.kappa, 0.985);
  check4(r.sensitivity, 0.9794);
  check4(r.specificity, 1.0);
  check4(r.ppv, 1.0);
  check4(r.npv, 0.9909);
  check4(r.prevalence, 0.3079);
  check4(r.detection_rate, 0.3016);
  check4(r.detection_prevalence, 0.3016);
  check4(r.balanced_accuracy, 0.9897);
  CHECK(*r.p_value_acc_gt_nir < 2e-16);
  CHECK(r.positive_class == Label::No);
}

TEST_CASE("implied C4.5 count matrix reproduces its printed statistics") {
  const MetricsReport r = metrics({216, 2, 2, 95, Label::Yes});
  check4(r.accuracy, 0.9873);
  check4(r.ci95_low, 0.9678);
  check4(r.ci95_high, 0.9965);
  check4(r.nir, 0.6921);
  check4(r.kappa, 0.9702);
  check4(r.sensitivity, 0.9908);
  check4(r.specificity, 0.9794);
  check4(r.ppv, 0.9908);
  check4(r.npv, 0.9794);
  check4(r.prevalence, 0.6921);
  check4(r.detection_rate, 0.6857);
  check4(r.detection_prevalence, 0.6921);
  check4(r.balanced_accuracy, 0.9851);
}

TEST_CASE("metrics against direct formulas on random matrices") {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const ConfusionMatrix cm{1 + rng.index(200), 1 + rng.index(200), 1 + rng.index(200),
                             1 + rng.index(200), Label::Yes};
    const double tp = cm.tp, fn = cm.fn, fp = cm.fp, tn = cm.tn, n = cm.total();
    const MetricsReport r = metrics(cm);
    const double po = (tp + tn) / n;
    const double pe = ((tp + fn) / n) * ((tp + fp) / n) + ((fp + tn) / n) * ((fn + tn) / n);
    CHECK(*r.kappa == doctest::Approx((po - pe) / (1 - pe)).epsilon(1e-12));
    CHECK(*r.accuracy == doctest::Approx(po).epsilon(1e-15));
    CHECK(*r.balanced_accuracy == doctest::Approx((*r.sensitivity + *r.specificity) / 2).epsilon(1e-15));
    CHECK(*r.ci95_low <= *r.accuracy);
    CHECK(*r.accuracy <= *r.ci95_high);
    for (const auto& v : {r.sensitivity, r.specificity, r.ppv, r.npv, r.prevalence, r.detection_rate,
                          r.detection_prevalence, r.nir}) {
      CHECK(*v >= 0.0);
      CHECK(*v <= 1.0);
    }
    CHECK(*r.nir >= 0.5);

    // The flipped view swaps the class-specific rates and keeps the rest.
    const MetricsReport f = metrics(cm.flipped());
    CHECK(*f.specificity == *r.sensitivity);
    CHECK(*f.sensitivity == *r.specificity);
    CHECK(*f.ppv == *r.npv);
    CHECK(*f.npv == *r.ppv);
    CHECK(*f.accuracy == *r.accuracy);
    CHECK(*f.kappa == doctest::Approx(*r.kappa).epsilon(1e-12));
    CHECK(*f.nir == doctest::Approx(*r.nir).epsilon(1e-15));
    CHECK(*f.prevalence == doctest::Approx(1 - *r.prevalence).epsilon(1e-12));
  }
}

TEST_CASE("perfect classifier") {
  const MetricsReport r = metrics({30, 0, 0, 20, Label::Yes});
  CHECK(*r.accuracy == 1.0);
  CHECK(*r.kappa == 1.0);
  CHECK(*r.ci95_high == 1.0);
}

TEST_CASE("zero denominators leave only those fields undefined") {
  const MetricsReport no_positives = metrics({0, 0, 3, 7, Label::Yes});
  CHECK_FALSE(no_positives.sensitivity.has_value());
  CHECK_FALSE(no_positives.balanced_accuracy.has_value());
  CHECK_FALSE(no_positives.p_value_acc_gt_nir.has_value());  // nir is 1
  CHECK(*no_positives.specificity == 0.7);
  CHECK(*no_positives.ppv == 0.0);
  CHECK(*no_positives.prevalence == 0.0);

  const MetricsReport never_called = metrics({0, 4, 0, 6, Label::Yes});
  CHECK_FALSE(never_called.ppv.has_value());
  CHECK(*never_called.sensitivity == 0.0);
  CHECK(*never_called.specificity == 1.0);
  CHECK(*never_called.kappa == 0.0);

  const MetricsReport one_cell = metrics({5, 0, 0, 0, Label::Yes});
  CHECK_FALSE(one_cell.kappa.has_value());
  CHECK_FALSE(one_cell.specificity.has_value());
  CHECK_FALSE(one_cell.npv.has_value());
  CHECK(*one_cell.accuracy == 1.0);

  CHECK_THROWS_AS(metrics({0, 0, 0, 0, Label::Yes}), ValidationError);
  CHECK(format_key_values(one_cell).find("kappa=NA\n") != std::string::npos);
  CHECK(format_report(one_cell).find("Specificity : NA") != std::string::npos);
}

TEST_CASE("p-value formatting") {
  CHECK(format_p_value(7.3e-44) == "<2e-16");
  CHECK(format_p_value(9.99e-17) == "<2e-16");
  CHECK(format_p_value(0.171875) == "0.1719");
  CHECK(format_p_value(3.2e-5) == "3.2e-05");
}

TEST_CASE("report block layout") {
  const std::string text = format_report(metrics({218, 0, 12, 85, Label::Yes}));
  const std::vector<std::string> order{"Accuracy", "95% CI", "No Information Rate", "P-Value [Acc > NIR]",
                                       "Kappa", "Sensitivity", "Specificity", "Pos Pred Value",
                                       "Neg Pred Value", "Prevalence", "Detection Rate",
                                       "Detection Prevalence", "Balanced Accuracy", "'Positive' Class"};
  std::size_t at = 0;
  for (const auto& name : order) {
    const std::size_t found = text.find(name + " :", at);
    CAPTURE(name);
    REQUIRE(found != std::string::npos);
    at = found;
  }
  CHECK(text.find("Accuracy : 0.9619") != std::string::npos);
  CHECK(text.find("95% CI : (0.9344, 0.9802)") != std::string::npos);
  CHECK(text.find("P-Value [Acc > NIR] : <2e-16") != std::string::npos);
  CHECK(text.find("'Positive' Class : Yes") != std::string::npos);
  // Rows are predictions: predicted No row holds 85 true No and 0 true Yes.
  CHECK(text.find("        No    85     0\n") != std::string::npos);
  CHECK(text.find("       Yes    12   218\n") != std::string::npos);

  const std::string flipped = format_report(metrics(ConfusionMatrix{218, 0, 12, 85, Label::Yes}.flipped()));
  CHECK(flipped.find("        No    85     0\n") != std::string::npos);
  CHECK(flipped.find("'Positive' Class : No") != std::string::npos);
}

TEST_CASE("key-value output") {
  const std::string kv = format_key_values(metrics({95, 2, 0, 218, Label::No}));
  std::istringstream in(kv);
  std::string line;
  std::vector<std::string> keys;
  while (std::getline(in, line)) keys.push_back(line.substr(0, line.find('=')));
  CHECK(keys == std::vector<std::string>{"tp", "fn", "fp", "tn", "accuracy", "ci95_low", "ci95_high", "nir",
                                         "p_value_acc_gt_nir", "kappa", "sensitivity", "specificity", "ppv",
                                         "npv", "prevalence", "detection_rate", "detection_prevalence",
                                         "balanced_accuracy", "positive_class"});
  CHECK(kv.find("positive_class=No\n") != std::string::npos);
  CHECK(kv.find("tp=95\n") != std::string::npos);
}

TEST_CASE("roc simple cases") {
  const std::vector<Label> labels{Label::Yes, Label::No, Label::Yes, Label::No};
  CHECK(roc(labels, std::vector<double>{0.9, 0.1, 0.8, 0.2}).auc == 1.0);
  CHECK(roc(labels, std::vector<double>{0.1, 0.9, 0.2, 0.8}).auc == 0.0);
  const RocCurve flat = roc(labels, std::vector<double>{0.5, 0.5, 0.5, 0.5});
  CHECK(flat.auc == 0.5);
  REQUIRE(flat.points.size() == 2);
  CHECK(flat.points.back().fpr == 1.0);
  CHECK(flat.points.back().tpr == 1.0);

  // With No as positive, the same scores rank the other way.
  CHECK(roc(labels, std::vector<double>{0.9, 0.1, 0.8, 0.2}, Label::No).auc == 0.0);

  // Six points by hand: positives 0.9, 0.6, 0.4; negatives 0.7, 0.4, 0.2.
  // Concordant pairs: 0.9 beats 3, 0.6 beats 2, 0.4 beats 1 and ties 1 -> 6.5 / 9.
  const std::vector<Label> six{Label::Yes, Label::Yes, Label::Yes, Label::No, Label::No, Label::No};
  CHECK(roc(six, std::vector<double>{0.9, 0.6, 0.4, 0.7, 0.4, 0.2}).auc == doctest::Approx(6.5 / 9.0));

  CHECK_THROWS_AS(roc(std::vector<Label>{Label::Yes, Label::Yes}, std::vector<double>{0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(roc(labels, std::vector<double>{0.1, NAN, 0.2, 0.3}), ValidationError);
  CHECK_THROWS_AS(roc(labels, std::vector<double>{0.1}), ValidationError);
}

TEST_CASE("roc curve is monotone and the trapezoid area equals pairwise concordance") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<Label> labels(n);
    std::vector<double> scores(n);
    std::vector<bool> positive(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.bernoulli(0.5) ? Label::Yes : Label::No;
      // Coarse scores so ties are common.
      scores[i] = static_cast<double>(rng.index(6)) / 5.0;
    }
    labels[0] = Label::Yes;
    labels[1] = Label::No;
    for (std::size_t i = 0; i < n; ++i) positive[i] = labels[i] == Label::Yes;
    const RocCurve curve = roc(labels, scores);
    CHECK(std::fabs(curve.auc - mann_whitney_auc(scores, positive)) <= 1e-12);
    CHECK(curve.points.front().fpr == 0.0);
    CHECK(curve.points.front().tpr == 0.0);
    CHECK(curve.points.back().fpr == 1.0);
    CHECK(curve.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
      CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
      CHECK(curve.points[i].threshold < curve.points[i - 1].threshold);
    }
  }
}

TEST_CASE("roc csv") {
  const std::vector<Label> labels{Label::Yes, Label::No};
  const std::string csv = format_roc_csv(roc(labels, std::vector<double>{0.75, 0.25}));
  CHECK(csv.rfind("fpr,tpr,threshold\n0,0,inf\n", 0) == 0);
  CHECK(csv.find("0,1,0.75\n") != std::string::npos);
  CHECK(csv.find("1,1,0.25\n") != std::string::npos);
}

TEST_CASE("stratified folds partition the rows") {
  const FeatureMatrix m = oracle_data(739, 4);
  const auto folds = stratified_folds(m.labels, 5, 10);
  std::vector<std::size_t> sizes(5, 0);
  std::vector<std::size_t> yes(5, 0);
  for (std::size_t r = 0; r < folds.size(); ++r) {
    REQUIRE(folds[r] < 5);
    ++sizes[folds[r]];
    yes[folds[r]] += m.labels[r] == Label::Yes;
  }
  std::vector<std::size_t> sorted = sizes;
  std::sort(sorted.rbegin(), sorted.rend());
  CHECK(sorted == std::vector<std::size_t>{148, 148, 148, 148, 147});
  const auto [lo, hi] = std::minmax_element(yes.begin(), yes.end());
  CHECK(*hi - *lo <= 1);
  for (std::size_t f = 0; f < 5; ++f) {
    const std::size_t no = sizes[f] - yes[f];
    for (std::size_t g = 0; g < 5; ++g) {
      const std::size_t other_no = sizes[g] - yes[g];
      CHECK((no > other_no ? no - other_no : other_no - no) <= 1);
    }
  }
  CHECK(stratified_folds(m.labels, 5, 10) == folds);
  CHECK(stratified_folds(m.labels, 5, 11) != folds);
  CHECK_THROWS_AS(stratified_folds(m.labels, 1, 10), ValidationError);
  CHECK_THROWS_AS(stratified_folds(std::vector<Label>{Label::Yes}, 2, 10), ValidationError);
}

TEST_CASE("fold partition property over sizes and k") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.index(9);
    const std::size_t n = k + rng.index(120);
    std::vector<Label> labels(n);
    for (auto& l : labels) l = rng.bernoulli(rng.uniform()) ? Label::Yes : Label::No;
    const auto folds = stratified_folds(labels, k, trial);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t f : folds) ++sizes[f];
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(*hi - *lo <= 1);
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
  }
}

TEST_CASE("cross-validation with a perfect oracle") {
  const FeatureMatrix m = oracle_data(300, 6);
  std::vector<std::uint64_t> seen_seeds;
  const CvResult cv = cross_validate(
      m,
      [&](const FeatureMatrix& train, std::uint64_t seed) -> RowClassifier {
        CHECK(train.rows() >= 239);
        CHECK(train.rows() <= 240);
        seen_seeds.push_back(seed);
        return sum_rule;
      },
      5, 77);
  CHECK(cv.fold_accuracies == std::vector<double>(5, 1.0));
  CHECK(cv.mean == 1.0);
  CHECK(cv.sd == 0.0);
  CHECK(cv.seed == 77);
  REQUIRE(seen_seeds.size() == 5);
  for (std::size_t f = 0; f < 5; ++f) CHECK(seen_seeds[f] == derive_seed(77, f));
}

TEST_CASE("cross-validation statistics") {
  const FeatureMatrix m = oracle_data(200, 7);
  const CvResult cv = cross_validate(m, ModelSpec::defaults(ModelKind::C45), 5, 3);
  REQUIRE(cv.fold_accuracies.size() == 5);
  const double mean = std::accumulate(cv.fold_accuracies.begin(), cv.fold_accuracies.end(), 0.0) / 5;
  double ss = 0.0;
  for (double a : cv.fold_accuracies) ss += (a - mean) * (a - mean);
  CHECK(cv.mean == doctest::Approx(mean).epsilon(1e-15));
  CHECK(cv.sd == doctest::Approx(std::sqrt(ss / 4)).epsilon(1e-12));
  CHECK(cv.mean > 0.8);
  const CvResult again = cross_validate(m, ModelSpec::defaults(ModelKind::C45), 5, 3);
  CHECK(again.fold_accuracies == cv.fold_accuracies);
}

TEST_CASE("eda shares") {
  const auto records = generate({500, 8, 0.69});
  const EdaSummary summary = eda_summary(records);
  CHECK(summary.total == 500);
  CHECK(summary.label_counts.at("All") == 500);
  CHECK(summary.label_counts.at("Yes") + summary.label_counts.at("No") == 500);
  for (const auto* shares : {&summary.sex_share, &summary.ethnicity_share}) {
    for (const auto& [label, per] : *shares) {
      double total = 0.0;
      for (const auto& [category, share] : per) total += share;
      CAPTURE(label);
      CHECK(std::fabs(total - 1.0) <= 1e-12);
    }
  }
  const std::string text = format_eda(summary);
  CHECK(text.find("Records: 500") != std::string::npos);
  CHECK(text.find("Sex by class") != std::string::npos);
  CHECK(text.find("Ethnicity by class") != std::string::npos);
  CHECK_FALSE(format_eda_key_values(summary).empty());
}

TEST_CASE("eda of one record") {
  const auto records = generate({1, 9, 0.69});
  const EdaSummary summary = eda_summary(records);
  const std::string label(to_string(records[0].label));
  const std::string sex(to_string(records[0].sex));
  CHECK(summary.sex_share.at(label).at(sex) == 1.0);
  CHECK(summary.ethnicity_share.at(label).at(records[0].ethnicity) == 1.0);
  CHECK(summary.sex_share.at("All").at(sex) == 1.0);
  CHECK_THROWS_AS(eda_summary(std::vector<ScreeningRecord>{}), ValidationError);
}

TEST_CASE("eda sex shares are near one half under uniform demographics") {
  const EdaSummary summary = eda_summary(generate({10000, 10, 0.69}));
  for (const auto& [sex, share] : summary.sex_share.at("All")) {
    CAPTURE(sex);
    CHECK(std::fabs(share - 0.5) <= 0.02);
  }
}

TEST_CASE("comparison table") {
  const std::vector<ComparisonRow> rows{{"C4.5", metrics({216, 2, 2, 95, Label::Yes})},
                                        {"Random Forest", metrics({218, 0, 12, 85, Label::Yes})}};
  const std::string table = format_comparison(rows);
  std::istringstream in(table);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header.find("Accuracy") < header.find("Sensitivity"));
  CHECK(header.find("Sensitivity") < header.find("Specificity"));
  CHECK(first.rfind("C4.5", 0) == 0);
  CHECK(first.find("0.9873") != std::string::npos);
  CHECK(second.find("0.9619") != std::string::npos);
  CHECK(second.find("1.0000") != std::string::npos);
  CHECK(second.find("0.8763") != std::string::npos);
}
