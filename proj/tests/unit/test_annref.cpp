#include <cmath>
#include <numeric>

#include "doctest.h"
#include "snnbench/annref.hpp"
#include "snnbench/error.hpp"

using namespace snnbench;

namespace {

AnnModel tiny(double w) {
  AnnModel m = ann_init({1, 1, 1}, 1);
  m.weights[0](0, 0) = w;
  m.weights[1](0, 0) = 1.0;
  m.biases[0] = {0.0};
  m.biases[1] = {0.0};
  return m;
}

Dataset blobs(std::size_t per_class, std::uint64_t seed) {
  Dataset ds;
  ds.n_features = 6;
  ds.n_classes = 3;
  Rng rng(seed);
  for (std::size_t s = 0; s < 3 * per_class; ++s) {
    const std::size_t k = s % 3;
    for (std::size_t j = 0; j < 6; ++j) ds.x.push_back((j / 2 == k ? 0.8 : 0.1) + 0.2 * uniform01(rng));
    ds.labels.push_back(static_cast<int>(k));
  }
  return ds;
}

}  // namespace

TEST_CASE("forward pass basics") {
  AnnModel z = ann_init({4, 3, 2}, 1);
  for (auto& w : z.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
  std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const AnnForward zf = ann_forward(z, x);
  for (double v : zf.logits()) CHECK(v == 0.0);

  std::vector<double> half{0.5};
  CHECK(ann_forward(tiny(2.0), half).activations[1][0] == 1.0);
  CHECK(ann_forward(tiny(-1.0), half).activations[1][0] == 0.0);
  CHECK(ann_forward(tiny(2.0), half).activations[0][0] == 0.5);

  std::vector<double> wrong{0.1, 0.2};
  CHECK_THROWS_AS(ann_forward(z, wrong), DimensionError);
}

TEST_CASE("hidden activations are never negative") {
  const AnnModel m = ann_init({6, 10, 10, 3}, 4);
  const Dataset ds = blobs(20, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = ann_forward(m, ds.features(i));
    for (std::size_t l = 1; l + 1 < f.activations.size(); ++l)
      for (double a : f.activations[l]) CHECK(a >= 0.0);
  }
}

TEST_CASE("gradient matches central finite differences") {
  // 3-4-2: 26 parameters.
  AnnModel m = ann_init({3, 4, 2}, 9);
  for (auto& b : m.biases)
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.05 * static_cast<double>(i + 1);
  Dataset ds;
  ds.n_features = 3;
  ds.n_classes = 2;
  ds.x = {0.9, 0.1, 0.4, 0.2, 0.8, 0.5, 0.7, 0.6, 0.3};
  ds.labels = {0, 1, 1};
  std::vector<std::size_t> idx{0, 1, 2};
  const AnnGradients g = ann_grad(m, ds, idx);
  CHECK(g.loss == doctest::Approx(ann_loss(m, ds, idx)).epsilon(1e-14));
  const double h = 1e-5;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
  for (std::size_t c = 0; c < m.weights.size(); ++c) {
    for (std::size_t k = 0; k < m.weights[c].data.size(); ++k) {
      AnnModel p = m, q = m;
      p.weights[c].data[k] += h;
      q.weights[c].data[k] -= h;
      const double fd = (ann_loss(p, ds, idx) - ann_loss(q, ds, idx)) / (2 * h);
      CHECK(rel(g.weights[c].data[k], fd) < 1e-4);
    }
    for (std::size_t k = 0; k < m.biases[c].size(); ++k) {
      AnnModel p = m, q = m;
      p.biases[c][k] += h;
      q.biases[c][k] -= h;
      const double fd = (ann_loss(p, ds, idx) - ann_loss(q, ds, idx)) / (2 * h);
      CHECK(rel(g.biases[c][k], fd) < 1e-4);
    }
  }
}

TEST_CASE("zero epochs leaves the model unchanged") {
  AnnModel m = ann_init({6, 5, 3}, 2);
  const AnnModel before = m;
  AnnTrainConfig cfg;
  cfg.epochs = 0;
  const Dataset ds = blobs(5, 2);
  CHECK(ann_train(m, ds, ds, cfg).empty());
  CHECK(m == before);
}

TEST_CASE("training is deterministic and fits separable blobs") {
  const Dataset train = blobs(50, 3), test = blobs(20, 4);
  AnnTrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 10;
  cfg.opt.lr = 1e-2;
  AnnModel a = ann_init({6, 12, 3}, 7), b = a;
  const auto ca = ann_train(a, train, test, cfg);
  const auto cb = ann_train(b, train, test, cfg);
  REQUIRE(ca.size() == 10);
  for (std::size_t e = 0; e < ca.size(); ++e) CHECK(ca[e].train_loss == cb[e].train_loss);
  CHECK(a == b);
  CHECK(ca.back().train_loss < ca.front().train_loss);
  CHECK(ca.back().test_acc == 100.0);
  CHECK(ann_evaluate(a, test) == ca.back().test_acc);
}

TEST_CASE("initialisation is seeded and shaped") {
  const AnnModel a = ann_init({5, 4, 3}, 11), b = ann_init({5, 4, 3}, 11), c = ann_init({5, 4, 3}, 12);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].rows == 4);
  CHECK(a.weights[0].cols == 5);
  CHECK(a.biases[1].size() == 3);
  for (double bias : a.biases[0]) CHECK(bias == 0.0);
  AnnModel bad = a;
  bad.weights[0].data[0] = INFINITY;
  CHECK_THROWS(bad.validate());
}
