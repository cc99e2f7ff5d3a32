#pragma once

#include "pedcross/tensor.hpp"

#include <string>
#include <vector>

namespace pedcross {

struct MetricsReport {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  double ade = 0.0, fde = 0.0;

  long long total() const { return tp + fp + fn + tn; }
  std::string to_kv() const;
  static std::string csv_header();
  std::string csv_row(const std::string& model) const;
};

// 2PR/(P+R); 0 when both terms are 0.
double f1_score(double precision, double recall);

// Accuracy (TP+TN)/total, precision TP/(TP+FP), recall TP/(TP+FN),
// F1 = 2PR/(P+R). Zero denominators yield 0 rather than an error.
MetricsReport classification_metrics(const std::vector<int>& preds,
                                     const std::vector<int>& labels);

// Mean per-step Euclidean distance between [T' x 2] trajectories.
double ade(const RowMat& pred, const RowMat& truth);

// Euclidean distance at the final step only.
double fde(const RowMat& pred, const RowMat& truth);

}  // namespace pedcross
