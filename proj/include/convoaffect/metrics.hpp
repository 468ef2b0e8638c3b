// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Multiclass evaluation: confusion matrix, per-class F1 and the
// support-weighted average F1. A class whose precision+recall is zero
// scores 0 by convention.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "convoaffect/common.hpp"

namespace convoaffect {

struct EvalReport {
  Eigen::VectorXd per_class_f1;             // n_classes, each in [0, 1]
  double weighted_f1 = 0.0;
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> confusion;  // true x pred
  Eigen::Matrix<long, Eigen::Dynamic, 1> support;                 // row sums

  long total() const { return confusion.sum(); }
  double accuracy() const {
    const long n = total();
    return n == 0 ? 0.0 : static_cast<double>(confusion.diagonal().sum()) / n;
  }
};

EvalReport compute_eval_report(std::span<const int> preds,
                               std::span<const int> labels, int n_classes);

double weighted_f1(std::span<const int> preds, std::span<const int> labels,
                   int n_classes);

// Fixed label table: ids are alphabetical over the seven emotion names.
const std::vector<std::string>& emotion_names();
int emotion_id_from_name(const std::string& name);

// Aligned text table, one column per class plus the weighted average,
// values as fractions with three decimals.
std::string format_report_table(const EvalReport& report,
                                std::span<const std::string> class_names);

}  // namespace convoaffect
