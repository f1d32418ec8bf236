#include "snnbench/annref.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "snnbench/error.hpp"

namespace snnbench {

void AnnModel::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("AnnModel: need at least 2 layers");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
    throw DimensionError("AnnModel: expected one weight matrix and bias per connection");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows != layer_sizes[l + 1] || weights[l].cols != layer_sizes[l] ||
        weights[l].data.size() != weights[l].rows * weights[l].cols)
      throw DimensionError("AnnModel: weight matrix " + std::to_string(l) + " has wrong shape");
    if (biases[l].size() != layer_sizes[l + 1])
      throw DimensionError("AnnModel: bias " + std::to_string(l) + " has wrong length");
    for (double w : weights[l].data)
      if (!std::isfinite(w)) throw NumericError("AnnModel: non-finite weight");
    for (double b : biases[l])
      if (!std::isfinite(b)) throw NumericError("AnnModel: non-finite bias");
  }
}

AnnModel ann_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ConfigError("ann_init: need at least 2 layers");
  AnnModel m;
  m.layer_sizes = layer_sizes;
  Rng rng(mix_seed(seed, 0x616e6eULL));
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer_sizes[l]));
    Matrix w(layer_sizes[l + 1], layer_sizes[l]);
    for (double& x : w.data) x = (2.0 * uniform01(rng) - 1.0) * limit;
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(layer_sizes[l + 1], 0.0);
  }
  return m;
}

namespace {

void nonzero_indices(std::span<const double> x, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] != 0.0) out.push_back(j);
}

std::vector<double> softmax(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy(std::span<const double> z, int label) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return std::log(sum) + zmax - z[static_cast<std::size_t>(label)];
}

std::size_t argmax(std::span<const double> z) {
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

}  // namespace

AnnForward ann_forward(const AnnModel& model, std::span<const double> x) {
  if (x.size() != model.layer_sizes.front())
    throw DimensionError("ann_forward: input has " + std::to_string(x.size()) +
                         " values, model expects " + std::to_string(model.layer_sizes.front()));
  AnnForward f;
  f.activations.emplace_back(x.begin(), x.end());
  std::vector<std::size_t> nz;
  const std::size_t n_conn = model.weights.size();
  for (std::size_t l = 0; l < n_conn; ++l) {
    const auto& in = f.activations.back();
    nonzero_indices(in, nz);
    const Matrix& w = model.weights[l];
    std::vector<double> out(model.biases[l]);
    for (std::size_t i = 0; i < w.rows; ++i) {
      const double* row = w.data.data() + i * w.cols;
      double acc = 0.0;
      for (auto j : nz) acc += row[j] * in[j];
      out[i] += acc;
    }
    if (l + 1 < n_conn)
      for (double& v : out) v = std::max(v, 0.0);
    f.activations.push_back(std::move(out));
  }
  return f;
}

AnnGradients ann_grad(const AnnModel& model, const Dataset& data,
                      std::span<const std::size_t> indices) {
  AnnGradients g;
  for (const auto& w : model.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : model.biases) g.biases.emplace_back(b.size(), 0.0);
  if (indices.empty()) return g;
  const std::size_t n_conn = model.weights.size();
  std::vector<std::size_t> nz;
  for (auto idx : indices) {
    const AnnForward f = ann_forward(model, data.features(idx));
    const int y = data.labels[idx];
    const auto& z = f.logits();
    g.loss += cross_entropy(z, y);
    if (argmax(z) == static_cast<std::size_t>(y)) ++g.correct;
    std::vector<double> delta = softmax(z);
    delta[static_cast<std::size_t>(y)] -= 1.0;
    for (std::size_t l = n_conn; l-- > 0;) {
      const auto& in = f.activations[l];
      nonzero_indices(in, nz);
      const Matrix& w = model.weights[l];
      Matrix& gw = g.weights[l];
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double d = delta[i];
        if (d == 0.0) continue;
        g.biases[l][i] += d;
        double* grow = gw.data.data() + i * gw.cols;
        for (auto j : nz) grow[j] += d * in[j];
      }
      if (l == 0) break;
      std::vector<double> prev(w.cols, 0.0);
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double d = delta[i];
        if (d == 0.0) continue;
        const double* row = w.data.data() + i * w.cols;
        for (std::size_t j = 0; j < w.cols; ++j) prev[j] += d * row[j];
      }
      // ReLU derivative (activation > 0).
      for (std::size_t j = 0; j < prev.size(); ++j)
        if (in[j] <= 0.0) prev[j] = 0.0;
      delta = std::move(prev);
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (auto& w : g.weights)
    for (double& v : w.data) v *= inv;
  for (auto& b : g.biases)
    for (double& v : b) v *= inv;
  g.loss *= inv;
  return g;
}

double ann_loss(const AnnModel& model, const Dataset& data, std::span<const std::size_t> indices) {
  double loss = 0.0;
  for (auto idx : indices) loss += cross_entropy(ann_forward(model, data.features(idx)).logits(), data.labels[idx]);
  return indices.empty() ? 0.0 : loss / static_cast<double>(indices.size());
}

double ann_evaluate(const AnnModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (argmax(ann_forward(model, data.features(i)).logits()) == static_cast<std::size_t>(data.labels[i]))
      ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<EpochStats> ann_train(AnnModel& model, const Dataset& train, const Dataset& test,
                                  const AnnTrainConfig& cfg, const EpochCallback& on_epoch) {
  model.validate();
  if (!train.is_static()) throw ConfigError("ann_train: requires a static dataset");
  if (cfg.batch_size == 0) throw ConfigError("ann_train: batch size must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("ann_train: epochs must be >= 0");
  std::vector<std::size_t> sizes;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    sizes.push_back(model.weights[l].data.size());
    sizes.push_back(model.biases[l].size());
  }
  Optimizer opt(cfg.opt, sizes);
  std::vector<std::size_t> order(train.size());
  std::vector<EpochStats> curve;
  double lr = cfg.opt.lr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + b, e - b);
      AnnGradients g = ann_grad(model, train, batch);
      if (!std::isfinite(g.loss))
        throw DivergenceError("ann_train: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += g.loss * static_cast<double>(batch.size());
      correct += g.correct;
      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> grads;
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        params.emplace_back(model.weights[l].data);
        params.emplace_back(model.biases[l]);
        grads.emplace_back(g.weights[l].data);
        grads.emplace_back(g.biases[l]);
      }
      opt.step(params, grads, lr);
    }
    lr *= cfg.opt.lr_decay;
    EpochStats s;
    s.epoch = epoch;
    s.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, train.size()));
    s.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(1, train.size()));
    s.test_acc = ann_evaluate(model, test);
    s.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    curve.push_back(s);
    if (on_epoch) on_epoch(s);
  }
  return curve;
}

}  // namespace snnbench
