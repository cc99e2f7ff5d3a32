#include "pedcross/metrics.hpp"
#include "pedcross/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace pedcross;

TEST_CASE("f1 from published precision/recall pair") {
  // 2 * 0.8650 * 0.8803 / (0.8650 + 0.8803) = 0.87255...
  CHECK(std::abs(f1_score(0.8650, 0.8803) - 0.8726) < 1e-4);
  CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("classification_metrics hand confusion matrix") {
  // TP=3, FP=1, FN=1, TN=5.
  std::vector<int> preds{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  std::vector<int> labels{1, 1, 1, 0, 1, 0, 0, 0, 0, 0};
  MetricsReport r = classification_metrics(preds, labels);
  CHECK(r.tp == 3);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.tn == 5);
  CHECK(r.accuracy == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.precision == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r.recall == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r.f1 == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r.total() == 10);
}

TEST_CASE("classification_metrics perfect case and zero-denominator conventions") {
  std::vector<int> all1{1, 1, 0, 0};
  MetricsReport perfect = classification_metrics(all1, all1);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  // No positive predictions: precision 0; no positive labels: recall 0.
  MetricsReport no_pos = classification_metrics({0, 0}, {1, 0});
  CHECK(no_pos.precision == 0.0);
  CHECK(no_pos.f1 == 0.0);
  MetricsReport no_true = classification_metrics({1, 0}, {0, 0});
  CHECK(no_true.recall == 0.0);

  CHECK_THROWS_AS(classification_metrics({1}, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(classification_metrics({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(classification_metrics({2}, {1}), std::invalid_argument);
}

TEST_CASE("classification_metrics equals brute-force recount on random cases") {
  Rng rng(17);
  for (int it = 0; it < 20; ++it) {
    const int n = 1 + static_cast<int>(rng.uniform_int(50));
    std::vector<int> preds, labels;
    for (int i = 0; i < n; ++i) {
      preds.push_back(rng.bernoulli(0.5) ? 1 : 0);
      labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    MetricsReport r = classification_metrics(preds, labels);
    long long tp = 0, fp = 0, fn = 0, tn = 0, correct = 0;
    for (int i = 0; i < n; ++i) {
      if (preds[i] == labels[i]) ++correct;
      if (preds[i] == 1 && labels[i] == 1) ++tp;
      if (preds[i] == 1 && labels[i] == 0) ++fp;
      if (preds[i] == 0 && labels[i] == 1) ++fn;
      if (preds[i] == 0 && labels[i] == 0) ++tn;
    }
    CHECK(r.tp == tp);
    CHECK(r.fp == fp);
    CHECK(r.fn == fn);
    CHECK(r.tn == tn);
    CHECK(r.accuracy == doctest::Approx(double(correct) / n).epsilon(1e-15));
    // F1 recomputes exactly from the reported precision and recall.
    CHECK(r.f1 == doctest::Approx(f1_score(r.precision, r.recall)).epsilon(1e-15));
  }
}

namespace {

RowMat traj(std::initializer_list<std::pair<double, double>> pts) {
  RowMat m(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::Index i = 0;
  for (auto [x, y] : pts) {
    m(i, 0) = x;
    m(i, 1) = y;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("ade hand cases") {
  RowMat t = traj({{0, 0}, {1, 1}, {2, 2}});
  CHECK(ade(t, t) == 0.0);

  RowMat off = t;
  off.col(0).array() += 1.0;  // constant (1,0) offset
  CHECK(ade(off, t) == doctest::Approx(1.0).epsilon(1e-15));

  RowMat pyth = t;
  pyth.col(0).array() += 3.0;
  pyth.col(1).array() += 4.0;
  CHECK(ade(pyth, t) == doctest::Approx(5.0).epsilon(1e-15));

  RowMat shorter = traj({{0, 0}});
  CHECK_THROWS_AS(ade(shorter, t), std::invalid_argument);
}

TEST_CASE("fde hand cases and final-step independence") {
  RowMat t = traj({{0, 0}, {1, 0}, {2, 0}});
  CHECK(fde(t, t) == 0.0);

  RowMat final_off = t;
  final_off(2, 1) += 2.0;
  CHECK(fde(final_off, t) == doctest::Approx(2.0).epsilon(1e-15));

  // Perturbing a non-final step leaves FDE unchanged.
  RowMat early_off = final_off;
  early_off(0, 0) += 100.0;
  CHECK(fde(early_off, t) == fde(final_off, t));

  RowMat empty(0, 2);
  CHECK_THROWS_AS(fde(empty, empty), std::invalid_argument);
}

TEST_CASE("ade/fde properties on random trajectories") {
  Rng rng(41);
  for (int it = 0; it < 50; ++it) {
    const int n = 1 + static_cast<int>(rng.uniform_int(12));
    RowMat p(n, 2), t(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) {
        p(i, j) = rng.uniform(-50, 50);
        t(i, j) = rng.uniform(-50, 50);
      }
    // Brute-force reference.
    double acc = 0.0, max_step = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = std::hypot(p(i, 0) - t(i, 0), p(i, 1) - t(i, 1));
      acc += d;
      max_step = std::max(max_step, d);
    }
    CHECK(ade(p, t) == doctest::Approx(acc / n).epsilon(1e-12));
    CHECK(ade(p, t) <= max_step + 1e-12);
    CHECK(ade(p, t) >= fde(p, t) / n - 1e-12);

    // Translation invariance.
    RowMat p2 = p, t2 = t;
    p2.col(0).array() += 17.5;
    t2.col(0).array() += 17.5;
    p2.col(1).array() -= 3.25;
    t2.col(1).array() -= 3.25;
    CHECK(ade(p2, t2) == doctest::Approx(ade(p, t)).epsilon(1e-12));
    CHECK(fde(p2, t2) == doctest::Approx(fde(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("report serialization: key-value and CSV shapes") {
  MetricsReport r = classification_metrics({1, 0, 1, 0}, {1, 0, 0, 1});
  r.ade = 3.5;
  r.fde = 7.25;
  const std::string kv = r.to_kv();
  CHECK(kv.find("accuracy=0.500000") != std::string::npos);
  CHECK(kv.find("ade=3.500000") != std::string::npos);
  CHECK(kv.find("tp=1") != std::string::npos);

  CHECK(MetricsReport::csv_header() == "model,acc,prec,rec,f1,ade,fde");
  const std::string row = r.csv_row("stgcn-full");
  CHECK(row.substr(0, 11) == "stgcn-full,");
  CHECK(std::count(row.begin(), row.end(), ',') == 6);
}
