#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace neuroscan {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<int64_t> counts;  // C x C row-major

  size_t num_classes() const { return class_names.size(); }
  int64_t at(size_t true_class, size_t predicted) const {
    return counts[true_class * num_classes() + predicted];
  }
  int64_t total() const;
  int64_t row_sum(size_t true_class) const;
  int64_t col_sum(size_t predicted) const;
};

ConfusionMatrix confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predicted,
                          const std::vector<std::string>& class_names);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // a zero denominator was replaced by 0.0
};

std::vector<ClassScores> precision_recall_f1(const ConfusionMatrix& m);

double accuracy(const ConfusionMatrix& m);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

/// One-vs-rest curve: thresholds sweep the distinct positive-class scores in
/// descending order with a +infinity sentinel, so the curve always starts at
/// (0,0) and ends at (1,1); tied scores share one point.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc_curve(const std::vector<std::vector<double>>& scores,
                   const std::vector<int>& true_labels, int positive_class);

/// Trapezoidal area; rejects non-monotone curves.
double auc(const RocCurve& curve);

struct MetricsReport {
  std::string model;
  std::vector<std::string> class_names;
  ConfusionMatrix matrix;
  std::vector<ClassScores> per_class;
  std::vector<double> per_class_auc;       // 0.0 when degenerate
  std::vector<bool> auc_degenerate;
  double accuracy = 0.0;
  ClassScores macro;                        // unweighted class means
  ClassScores weighted;                     // support-weighted means
  double macro_auc = 0.0;
};

/// Full evaluation of per-sample probability vectors against true labels.
MetricsReport evaluate_predictions(const std::vector<std::vector<double>>& scores,
                                   const std::vector<int>& true_labels,
                                   const std::vector<std::string>& class_names,
                                   const std::string& model_name);

std::string report_json(const MetricsReport& report);
std::string confusion_csv(const ConfusionMatrix& m);
std::string roc_csv(const RocCurve& curve);

}  // namespace neuroscan
