// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace convoaffect {

EvalReport compute_eval_report(std::span<const int> preds,
                               std::span<const int> labels, int n_classes) {
  if (preds.size() != labels.size()) {
    throw DataError("prediction/label length mismatch: " +
                    std::to_string(preds.size()) + " vs " +
                    std::to_string(labels.size()));
  }
  if (preds.empty()) {
    throw DataError("cannot evaluate an empty stream");
  }
  EvalReport r;
  r.confusion.setZero(n_classes, n_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int y = labels[i];
    if (p < 0 || p >= n_classes || y < 0 || y >= n_classes) {
      throw DataError("class id out of range at index " + std::to_string(i));
    }
    r.confusion(y, p) += 1;
  }
  r.support = r.confusion.rowwise().sum();
  r.per_class_f1.setZero(n_classes);
  const double n = static_cast<double>(preds.size());
  double wf1 = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    const double tp = static_cast<double>(r.confusion(c, c));
    const double pred_c = static_cast<double>(r.confusion.col(c).sum());
    const double true_c = static_cast<double>(r.support[c]);
    const double precision = pred_c == 0.0 ? 0.0 : tp / pred_c;
    const double recall = true_c == 0.0 ? 0.0 : tp / true_c;
    const double f1 = precision + recall == 0.0
                          ? 0.0
                          : 2.0 * precision * recall / (precision + recall);
    r.per_class_f1[c] = f1;
    wf1 += (true_c / n) * f1;
  }
  r.weighted_f1 = wf1;
  return r;
}

double weighted_f1(std::span<const int> preds, std::span<const int> labels,
                   int n_classes) {
  return compute_eval_report(preds, labels, n_classes).weighted_f1;
}

const std::vector<std::string>& emotion_names() {
  static const std::vector<std::string> names = {
      "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"};
  return names;
}

int emotion_id_from_name(const std::string& name) {
  const auto& names = emotion_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      return static_cast<int>(i);
    }
  }
  throw DataError("unknown emotion label \"" + name + "\"");
}

std::string format_report_table(const EvalReport& report,
                                std::span<const std::string> class_names) {
  std::ostringstream os;
  const int width = 10;
  auto cell = [&](const std::string& s) {
    os << std::string(s.size() >= width ? 1 : width - s.size(), ' ') << s;
  };
  auto num = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    cell(buf);
  };
  os << "metric";
  for (const auto& name : class_names) {
    cell(name);
  }
  cell("w-avg F1");
  os << "\n";
  os << "f1    ";
  for (Index c = 0; c < report.per_class_f1.rows(); ++c) {
    num(report.per_class_f1[c]);
  }
  num(report.weighted_f1);
  os << "\n";
  os << "n     ";
  for (Index c = 0; c < report.support.rows(); ++c) {
    cell(std::to_string(report.support[c]));
  }
  cell(std::to_string(report.total()));
  os << "\n";
  return os.str();
}

}  // namespace convoaffect
