#include "neuroscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "neuroscan/error.hpp"
#include "neuroscan/model.hpp"

namespace neuroscan {

int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

int64_t ConfusionMatrix::row_sum(size_t true_class) const {
  int64_t s = 0;
  for (size_t j = 0; j < num_classes(); ++j) s += at(true_class, j);
  return s;
}

int64_t ConfusionMatrix::col_sum(size_t predicted) const {
  int64_t s = 0;
  for (size_t i = 0; i < num_classes(); ++i) s += at(i, predicted);
  return s;
}

ConfusionMatrix confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predicted,
                          const std::vector<std::string>& class_names) {
  if (true_labels.size() != predicted.size())
    raise(ErrorCode::invalid_argument, "confusion: length mismatch");
  const size_t c = class_names.size();
  ConfusionMatrix m;
  m.class_names = class_names;
  m.counts.assign(c * c, 0);
  for (size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<size_t>(t) >= c ||
        static_cast<size_t>(p) >= c)
      raise(ErrorCode::invalid_argument, "confusion: class index out of range");
    m.counts[static_cast<size_t>(t) * c + static_cast<size_t>(p)]++;
  }
  return m;
}

std::vector<ClassScores> precision_recall_f1(const ConfusionMatrix& m) {
  std::vector<ClassScores> out(m.num_classes());
  for (size_t c = 0; c < m.num_classes(); ++c) {
    const double tp = static_cast<double>(m.at(c, c));
    const double col = static_cast<double>(m.col_sum(c));
    const double row = static_cast<double>(m.row_sum(c));
    ClassScores& s = out[c];
    if (col == 0.0 || row == 0.0) s.degenerate = true;
    s.precision = col == 0.0 ? 0.0 : tp / col;
    s.recall = row == 0.0 ? 0.0 : tp / row;
    const double pr = s.precision + s.recall;
    if (pr == 0.0) {
      s.f1 = 0.0;
      s.degenerate = true;
    } else {
      s.f1 = 2.0 * s.precision * s.recall / pr;
    }
  }
  return out;
}

double accuracy(const ConfusionMatrix& m) {
  const int64_t total = m.total();
  if (total == 0)
    raise(ErrorCode::invalid_argument, "accuracy: empty confusion matrix");
  int64_t trace = 0;
  for (size_t c = 0; c < m.num_classes(); ++c) trace += m.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(total);
}

RocCurve roc_curve(const std::vector<std::vector<double>>& scores,
                   const std::vector<int>& true_labels, int positive_class) {
  if (scores.size() != true_labels.size())
    raise(ErrorCode::invalid_argument, "roc_curve: length mismatch");
  if (scores.empty())
    raise(ErrorCode::invalid_argument, "roc_curve: empty input");

  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> items;
  items.reserve(scores.size());
  size_t num_pos = 0, num_neg = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<size_t>(positive_class) >= scores[i].size())
      raise(ErrorCode::invalid_argument, "roc_curve: class index out of range");
    const bool pos = true_labels[i] == positive_class;
    items.push_back({scores[i][static_cast<size_t>(positive_class)], pos});
    (pos ? num_pos : num_neg)++;
  }
  if (num_pos == 0 || num_neg == 0)
    raise(ErrorCode::undefined_curve,
          "roc_curve: needs at least one positive and one negative sample");

  std::sort(items.begin(), items.end(),
            [](const Scored& a, const Scored& b) { return a.score > b.score; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  size_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < items.size()) {
    const double threshold = items[i].score;
    while (i < items.size() && items[i].score == threshold) {
      (items[i].positive ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(num_neg),
                            static_cast<double>(tp) / static_cast<double>(num_pos),
                            threshold});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2 || pts.front().fpr != 0.0 || pts.front().tpr != 0.0 ||
      pts.back().fpr != 1.0 || pts.back().tpr != 1.0)
    raise(ErrorCode::invalid_argument,
          "auc: curve must run from (0,0) to (1,1)");
  double area = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].fpr < pts[i - 1].fpr || pts[i].tpr < pts[i - 1].tpr)
      raise(ErrorCode::invalid_argument, "auc: curve is not monotone");
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2.0;
  }
  return area;
}

MetricsReport evaluate_predictions(const std::vector<std::vector<double>>& scores,
                                   const std::vector<int>& true_labels,
                                   const std::vector<std::string>& class_names,
                                   const std::string& model_name) {
  if (scores.size() != true_labels.size())
    raise(ErrorCode::invalid_argument, "evaluate: length mismatch");
  std::vector<int> predicted(scores.size());
  for (size_t i = 0; i < scores.size(); ++i)
    predicted[i] = static_cast<int>(argmax_index(scores[i]));

  MetricsReport r;
  r.model = model_name;
  r.class_names = class_names;
  r.matrix = confusion(true_labels, predicted, class_names);
  r.per_class = precision_recall_f1(r.matrix);
  r.accuracy = accuracy(r.matrix);

  const size_t c = class_names.size();
  r.per_class_auc.assign(c, 0.0);
  r.auc_degenerate.assign(c, false);
  for (size_t k = 0; k < c; ++k) {
    try {
      r.per_class_auc[k] = auc(roc_curve(scores, true_labels, static_cast<int>(k)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::undefined_curve) throw;
      r.auc_degenerate[k] = true;
    }
  }

  double support_total = 0.0;
  double auc_sum = 0.0;
  size_t auc_n = 0;
  for (size_t k = 0; k < c; ++k) {
    const double support = static_cast<double>(r.matrix.row_sum(k));
    r.macro.precision += r.per_class[k].precision / static_cast<double>(c);
    r.macro.recall += r.per_class[k].recall / static_cast<double>(c);
    r.macro.f1 += r.per_class[k].f1 / static_cast<double>(c);
    r.weighted.precision += r.per_class[k].precision * support;
    r.weighted.recall += r.per_class[k].recall * support;
    r.weighted.f1 += r.per_class[k].f1 * support;
    support_total += support;
    if (!r.auc_degenerate[k]) {
      auc_sum += r.per_class_auc[k];
      auc_n++;
    }
  }
  if (support_total > 0.0) {
    r.weighted.precision /= support_total;
    r.weighted.recall /= support_total;
    r.weighted.f1 /= support_total;
  }
  r.macro_auc = auc_n ? auc_sum / static_cast<double>(auc_n) : 0.0;
  return r;
}

std::string report_json(const MetricsReport& r) {
  nlohmann::json j;
  j["model"] = r.model;
  j["classes"] = r.class_names;
  const size_t c = r.class_names.size();
  std::vector<std::vector<int64_t>> grid(c, std::vector<int64_t>(c));
  for (size_t i = 0; i < c; ++i)
    for (size_t k = 0; k < c; ++k) grid[i][k] = r.matrix.at(i, k);
  j["confusion"] = grid;
  nlohmann::json per_class = nlohmann::json::object();
  for (size_t k = 0; k < c; ++k) {
    nlohmann::json entry;
    entry["precision"] = r.per_class[k].precision;
    entry["recall"] = r.per_class[k].recall;
    entry["f1"] = r.per_class[k].f1;
    entry["degenerate"] = r.per_class[k].degenerate;
    if (r.auc_degenerate[k])
      entry["auc"] = nullptr;
    else
      entry["auc"] = r.per_class_auc[k];
    per_class[r.class_names[k]] = entry;
  }
  j["per_class"] = per_class;
  j["accuracy"] = r.accuracy;
  j["macro"] = {{"precision", r.macro.precision},
                {"recall", r.macro.recall},
                {"f1", r.macro.f1},
                {"auc", r.macro_auc}};
  j["weighted"] = {{"precision", r.weighted.precision},
                   {"recall", r.weighted.recall},
                   {"f1", r.weighted.f1}};
  return j.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "true\\predicted";
  for (const auto& name : m.class_names) out += "," + name;
  out += "\n";
  for (size_t i = 0; i < m.num_classes(); ++i) {
    out += m.class_names[i];
    for (size_t j = 0; j < m.num_classes(); ++j)
      out += "," + std::to_string(m.at(i, j));
    out += "\n";
  }
  return out;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr,threshold\n";
  char line[128];
  for (const RocPoint& p : curve.points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", p.fpr, p.tpr,
                  p.threshold);
    out += line;
  }
  return out;
}

}  // namespace neuroscan
