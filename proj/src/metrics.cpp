#include "pedcross/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pedcross {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_kv() const {
  std::string s;
  s += "accuracy=" + fmt(accuracy) + "\n";
  s += "precision=" + fmt(precision) + "\n";
  s += "recall=" + fmt(recall) + "\n";
  s += "f1=" + fmt(f1) + "\n";
  s += "ade=" + fmt(ade) + "\n";
  s += "fde=" + fmt(fde) + "\n";
  s += "tp=" + std::to_string(tp) + "\n";
  s += "fp=" + std::to_string(fp) + "\n";
  s += "fn=" + std::to_string(fn) + "\n";
  s += "tn=" + std::to_string(tn) + "\n";
  return s;
}

std::string MetricsReport::csv_header() { return "model,acc,prec,rec,f1,ade,fde"; }

std::string MetricsReport::csv_row(const std::string& model) const {
  return model + "," + fmt(accuracy) + "," + fmt(precision) + "," + fmt(recall) +
         "," + fmt(f1) + "," + fmt(ade) + "," + fmt(fde);
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

MetricsReport classification_metrics(const std::vector<int>& preds,
                                     const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw std::invalid_argument("classification_metrics: " +
                                std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(labels.size()) + " labels");
  if (preds.empty())
    throw std::invalid_argument("classification_metrics: empty input");

  MetricsReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if (p != 0 && p != 1)
      throw std::invalid_argument("classification_metrics: prediction not in {0,1}");
    if (y != 0 && y != 1)
      throw std::invalid_argument("classification_metrics: label not in {0,1}");
    if (p == 1 && y == 1) ++r.tp;
    else if (p == 1 && y == 0) ++r.fp;
    else if (p == 0 && y == 1) ++r.fn;
    else ++r.tn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total());
  r.precision = (r.tp + r.fp) > 0
                    ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp)
                    : 0.0;
  r.recall = (r.tp + r.fn) > 0
                 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn)
                 : 0.0;
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

namespace {

void check_traj(const RowMat& pred, const RowMat& truth, const char* op) {
  if (pred.rows() < 1)
    throw std::invalid_argument(std::string(op) + ": empty trajectory");
  if (pred.rows() != truth.rows() || pred.cols() != 2 || truth.cols() != 2)
    throw std::invalid_argument(std::string(op) + ": trajectory shapes " +
                                std::to_string(pred.rows()) + "x" +
                                std::to_string(pred.cols()) + " vs " +
                                std::to_string(truth.rows()) + "x" +
                                std::to_string(truth.cols()));
}

}  // namespace

double ade(const RowMat& pred, const RowMat& truth) {
  check_traj(pred, truth, "ade");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t)
    acc += (pred.row(t) - truth.row(t)).norm();
  return acc / static_cast<double>(pred.rows());
}

double fde(const RowMat& pred, const RowMat& truth) {
  check_traj(pred, truth, "fde");
  const Eigen::Index last = pred.rows() - 1;
  return (pred.row(last) - truth.row(last)).norm();
}

}  // namespace pedcross
