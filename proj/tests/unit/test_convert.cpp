#include <cmath>
#include <numeric>

#include "doctest.h"
#include "snnbench/convert.hpp"
#include "snnbench/error.hpp"

using namespace snnbench;

namespace {

Dataset blobs(std::size_t per_class, std::uint64_t seed) {
  Dataset ds;
  ds.n_features = 8;
  ds.n_classes = 2;
  Rng rng(seed);
  for (std::size_t s = 0; s < 2 * per_class; ++s) {
    const std::size_t k = s % 2;
    for (std::size_t j = 0; j < 8; ++j) ds.x.push_back((j / 4 == k ? 0.7 : 0.05) + 0.3 * uniform01(rng));
    ds.labels.push_back(static_cast<int>(k));
  }
  return ds;
}

AnnModel trained_toy() {
  const Dataset ds = blobs(40, 1);
  AnnModel m = ann_init({8, 6, 2}, 3);
  AnnTrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 8;
  cfg.opt.lr = 1e-2;
  ann_train(m, ds, ds, cfg);
  return m;
}

// Steady-state spike count of a hard-reset LIF neuron that gains `a` per step
// (v' = beta v + a) after a one-step synaptic delay, over `window` steps.
std::uint64_t lif_transfer_count(double a, const LifParams& lif, int window) {
  const double beta = lif.beta();
  if (a <= 0.0) return 0;
  int k = 0;
  double v = 0.0;
  while (v < lif.v_th) {
    v = beta * v + a;
    if (++k > 100000) return 0;
  }
  const int period = k + lif.refrac_steps();
  const int first = k;  // drive starts at step 1, first spike after k integrations
  if (first >= window) return 0;
  return static_cast<std::uint64_t>((window - 1 - first) / period + 1);
}

}  // namespace

TEST_CASE("percentile arithmetic") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  auto a = v;
  CHECK(percentile_linear(a, 99.9) == doctest::Approx(999.001).epsilon(1e-12));
  a = v;
  CHECK(percentile_linear(a, 100.0) == 1000.0);
  a = v;
  CHECK(percentile_linear(a, 0.0) == 1.0);
  a = v;
  CHECK(percentile_linear(a, 50.0) == doctest::Approx(500.5));
  std::vector<double> one{3.0};
  CHECK(percentile_linear(one, 99.9) == 3.0);
  std::vector<double> empty;
  CHECK_THROWS_AS(percentile_linear(empty, 50), CalibrationError);
  CHECK_THROWS_AS(percentile_linear(v, 101), ConfigError);
}

TEST_CASE("calibration scales") {
  // Hidden activations are all 2.0 for any input: zero weights, bias 2.
  AnnModel m = ann_init({3, 4, 2}, 1);
  std::fill(m.weights[0].data.begin(), m.weights[0].data.end(), 0.0);
  m.biases[0].assign(4, 2.0);
  Dataset ds;
  ds.n_features = 3;
  ds.x = {0.2, 0.4, 0.6, 1.0, 0.5, 0.0};
  ds.labels = {0, 1};
  ds.n_classes = 2;
  std::fill(m.weights[1].data.begin(), m.weights[1].data.end(), 0.25);
  const CalibrationStats s = calibrate(m, ds, 99.9);
  REQUIRE(s.lambda.size() == 3);
  CHECK(s.lambda[1] == 2.0);
  CHECK(s.lambda[2] == 2.0);
  CHECK(s.samples == 2);
  const CalibrationStats mx = calibrate(m, ds, 100.0);
  CHECK(mx.lambda[0] == 1.0);

  AnnModel dead = m;
  dead.biases[0].assign(4, -1.0);
  CHECK_THROWS_AS(calibrate(dead, ds), CalibrationError);
  CHECK_THROWS_AS(calibrate(m, ds, 0.0), ConfigError);
}

TEST_CASE("balancing rescales weights by lambda ratios") {
  AnnModel m = ann_init({2, 2, 2}, 5);
  CalibrationStats unit{{1.0, 1.0, 1.0}, 10, 100.0};
  const Network same = convert(m, unit);
  auto bw = balanced_weights(same);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t k = 0; k < 4; ++k) CHECK(bw[c].data[k] == doctest::Approx(m.weights[c].data[k]).epsilon(1e-14));

  CalibrationStats half{{1.0, 2.0, 2.0}, 10, 99.9};
  bw = balanced_weights(convert(m, half));
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(bw[0].data[k] == doctest::Approx(0.5 * m.weights[0].data[k]).epsilon(1e-14));
    CHECK(bw[1].data[k] == doctest::Approx(m.weights[1].data[k]).epsilon(1e-14));
  }

  // Ratios r and 1/r telescope to an unchanged end-to-end scale.
  const double r = 3.0;
  CalibrationStats tele{{1.0, r, 1.0}, 10, 99.9};
  bw = balanced_weights(convert(m, tele));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double prod = 0, ref = 0;
      for (std::size_t h = 0; h < 2; ++h) {
        prod += bw[1](i, h) * bw[0](h, j);
        ref += m.weights[1](i, h) * m.weights[0](h, j);
      }
      CHECK(prod == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("conversion shapes, thresholds and input modes") {
  const AnnModel m = ann_init({8, 6, 2}, 2);
  const CalibrationStats s{{1.0, 1.5, 3.0}, 1, 99.9};
  const Network n = convert(m, s);
  CHECK(n.topology.layer_sizes == m.layer_sizes);
  CHECK(n.lif.v_th == 1.0);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(n.weights[c].rows == m.weights[c].rows);
    CHECK(n.weights[c].cols == m.weights[c].cols);
  }
  ConversionOptions rate;
  rate.input_mode = InputMode::spikes;
  rate.input_rate = 0.2;
  const Network nr = convert(m, s, LifParams{}, rate);
  CHECK(nr.weights[0].data[3] == doctest::Approx(n.weights[0].data[3] / 0.2).epsilon(1e-14));
  CHECK(nr.weights[1] == n.weights[1]);

  LifParams odd;
  odd.v_th = 2.0;
  CHECK_THROWS_AS(convert(m, s, odd), ConfigError);
  CHECK_THROWS_AS(convert(m, CalibrationStats{{1.0, 1.0}, 1, 99.9}), CalibrationError);
}

TEST_CASE("toy 2-2-2 rates follow the LIF transfer of the scaled activations") {
  AnnModel m = ann_init({2, 2, 2}, 1);
  m.weights[0] = Matrix(2, 2);
  m.weights[0](0, 0) = 0.8;
  m.weights[0](0, 1) = 0.2;
  m.weights[0](1, 0) = 0.1;
  m.weights[0](1, 1) = 0.3;
  m.weights[1] = Matrix(2, 2);
  m.weights[1](0, 0) = 1.0;
  m.weights[1](1, 1) = 0.5;
  m.biases = {{0.0, 0.0}, {0.0, 0.0}};
  Dataset ds;
  ds.n_features = 2;
  ds.n_classes = 2;
  ds.x = {1.0, 1.0, 0.5, 0.9, 0.2, 0.1};
  ds.labels = {0, 1, 0};
  const CalibrationStats s = calibrate(m, ds, 100.0);
  const LifParams lif;
  const Network snn = convert(m, s, lif);
  const int window = 20000;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = ann_forward(m, ds.features(i));
    AnalogInput in;
    for (double x : ds.features(i)) in.values.push_back(x / s.lambda[0]);
    const SimTrace full = simulate(snn, in, window);
    for (std::size_t u = 0; u < 2; ++u) {
      const double a = f.activations[1][u] / s.lambda[1];
      const double expected = static_cast<double>(lif_transfer_count(a, lif, window)) / window;
      INFO("sample " << i << " unit " << u << " a " << a);
      if (expected == 0.0) continue;
      const double rate = static_cast<double>(full.layers[1].unit_counts()[u]) / window;
      CHECK(std::abs(rate - expected) <= 0.05 * expected);
    }
  }
}

TEST_CASE("scaling one ANN layer before calibration does not change spiking") {
  // ReLU is positively homogeneous, so c passes through to every later layer;
  // lambda absorbs it exactly when those later layers carry no bias.
  AnnModel m = trained_toy();
  const Dataset calib = blobs(10, 5);
  for (std::size_t layer : {0, 1}) {
    AnnModel src = m;
    for (std::size_t c = layer + 1; c < src.biases.size(); ++c) std::fill(src.biases[c].begin(), src.biases[c].end(), 0.0);
    const CalibrationStats s = calibrate(src, calib, 99.9);
    const Network base = convert(src, s);
    for (double c : {0.25, 2.0, 3.7}) {
      AnnModel scaled = src;
      for (double& w : scaled.weights[layer].data) w *= c;
      for (double& b : scaled.biases[layer]) b *= c;
      const CalibrationStats sc = calibrate(scaled, calib, 99.9);
      for (std::size_t l = layer + 1; l < sc.lambda.size(); ++l)
        CHECK(sc.lambda[l] == doctest::Approx(c * s.lambda[l]).epsilon(1e-12));
      const Network conv = convert(scaled, sc);
      for (std::size_t k = 0; k < conv.weights.size(); ++k)
        for (std::size_t q = 0; q < conv.weights[k].data.size(); ++q)
          CHECK(conv.weights[k].data[q] == doctest::Approx(base.weights[k].data[q]).epsilon(1e-12));
      for (std::size_t i = 0; i < calib.size(); ++i) {
        AnalogInput in;
        for (double x : calib.features(i)) in.values.push_back(x / s.lambda[0]);
        const SimTrace a = simulate(base, in, 100), b = simulate(conv, in, 100);
        CHECK(a.spikes_per_layer == b.spikes_per_layer);
        CHECK(a.output_counts == b.output_counts);
      }
    }
  }
}

TEST_CASE("rate fidelity improves with the window for rate-coded input") {
  const AnnModel m = trained_toy();
  const Dataset probe = blobs(15, 6);
  const CalibrationStats s = calibrate(m, blobs(20, 7), 99.9);
  ConversionOptions co;
  co.input_mode = InputMode::spikes;
  const Network snn = convert(m, s, LifParams{}, co);
  EncoderConfig enc;
  double prev = -1.0;
  for (int w : {10, 25, 50, 100, 200}) {
    const FidelityResult f = rate_fidelity(snn, m, s, probe, w, InputMode::spikes, enc);
    CHECK(f.window == w);
    CHECK(f.correlation >= prev);
    prev = f.correlation;
  }
  CHECK(prev > 0.9);
}

TEST_CASE("analog-driven fidelity is settled after a few steps") {
  // Constant drive has no sampling noise: the correlation sits at the value set
  // by the LIF transfer curve from the first windows on and only wobbles by
  // rounding of spike counts, so it is not monotone in T.
  const AnnModel m = trained_toy();
  const Dataset probe = blobs(15, 6);
  const CalibrationStats s = calibrate(m, blobs(20, 7), 99.9);
  const Network snn = convert(m, s);
  EncoderConfig enc;
  const double settled = rate_fidelity(snn, m, s, probe, 1000, InputMode::analog_current, enc).correlation;
  CHECK(settled > 0.98);
  for (int w : {25, 50, 100, 200})
    CHECK(std::abs(rate_fidelity(snn, m, s, probe, w, InputMode::analog_current, enc).correlation - settled) < 0.005);
}

TEST_CASE("converted toy net: accuracy does not fall with longer windows") {
  const AnnModel m = trained_toy();
  const Dataset test = blobs(30, 8);
  const CalibrationStats s = calibrate(m, blobs(20, 9), 99.9);
  const Network snn = convert(m, s);
  EncoderConfig enc;
  const ConversionEval ev = eval_converted(snn, m, s, test, {25, 100, 200}, InputMode::analog_current, enc, 20);
  REQUIRE(ev.windows.size() == 3);
  REQUIRE(ev.fidelity.size() == 3);
  CHECK(ev.windows[2].stats.accuracy >= ev.windows[0].stats.accuracy);
  CHECK(ev.windows[2].stats.accuracy >= 90.0);
  CHECK(ev.windows[2].stats.spikes_mean > ev.windows[0].stats.spikes_mean);
  // Analog drive bypasses the input layer, so no input synops are counted.
  CHECK(ev.windows[2].stats.spikes_with_input_mean == ev.windows[2].stats.spikes_mean);
  CHECK_THROWS_AS(eval_converted(snn, m, s, test, {0}, InputMode::analog_current, enc), ConfigError);
}
