#include "snnbench/convert.hpp"

#include <algorithm>
#include <cmath>

#include "snnbench/error.hpp"

namespace snnbench {

double percentile_linear(std::vector<double>& values, double p) {
  if (values.empty()) throw CalibrationError("percentile: no values");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must be in [0, 100]");
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  if (hi == lo) return v_lo;
  const double v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return v_lo + (rank - static_cast<double>(lo)) * (v_hi - v_lo);
}

CalibrationStats calibrate(const AnnModel& model, const Dataset& calib, double percentile) {
  model.validate();
  if (!(percentile > 0.0 && percentile <= 100.0))
    throw ConfigError("calibrate: percentile must be in (0, 100]");
  if (calib.size() == 0) throw CalibrationError("calibrate: empty calibration set");
  const std::size_t n_layers = model.layer_sizes.size();
  std::vector<std::vector<double>> observed(n_layers);
  for (std::size_t i = 0; i < calib.size(); ++i) {
    const AnnForward f = ann_forward(model, calib.features(i));
    for (std::size_t l = 0; l < n_layers; ++l) {
      const bool output = l + 1 == n_layers;
      for (double a : f.activations[l]) observed[l].push_back(output ? std::max(a, 0.0) : a);
    }
  }
  CalibrationStats stats;
  stats.samples = calib.size();
  stats.percentile = percentile;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const double lam = percentile_linear(observed[l], percentile);
    if (!(lam > 0.0)) {
      // Fall back to the maximum before giving up: a very sparse layer can
      // have a zero high percentile yet still be active.
      const double mx = *std::max_element(observed[l].begin(), observed[l].end());
      if (!(mx > 0.0))
        throw CalibrationError("calibrate: layer " + std::to_string(l) + " (" +
                               layer_names(n_layers)[l] + ") never activates");
      stats.lambda.push_back(mx);
    } else {
      stats.lambda.push_back(lam);
    }
  }
  return stats;
}

Network convert(const AnnModel& model, const CalibrationStats& stats, const LifParams& lif,
                const ConversionOptions& opts) {
  model.validate();
  lif.validate();
  if (stats.lambda.size() != model.layer_sizes.size())
    throw CalibrationError("convert: missing calibration (expected one scale per layer)");
  for (double lam : stats.lambda)
    if (!(lam > 0.0) || !std::isfinite(lam)) throw CalibrationError("convert: scales must be positive");
  if (lif.v_th != 1.0) throw ConfigError("convert: balanced conversion assumes v_th = 1");
  if (opts.input_mode == InputMode::spikes && !(opts.input_rate > 0.0 && opts.input_rate <= 1.0))
    throw ConfigError("convert: input_rate must be in (0, 1]");

  Topology topo;
  topo.layer_sizes = model.layer_sizes;
  Network net = Network::zeros(topo, lif);
  const double gain = 1.0 / (1.0 - lif.beta());
  for (std::size_t c = 0; c < model.weights.size(); ++c) {
    double scale = gain * stats.lambda[c] / stats.lambda[c + 1];
    if (c == 0 && opts.input_mode == InputMode::spikes) scale /= opts.input_rate;
    for (std::size_t k = 0; k < model.weights[c].data.size(); ++k)
      net.weights[c].data[k] = model.weights[c].data[k] * scale;
    std::vector<double> b(model.biases[c].size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = gain * model.biases[c][i] / stats.lambda[c + 1];
    net.biases.push_back(std::move(b));
  }
  net.validate();
  return net;
}

std::vector<Matrix> balanced_weights(const Network& snn) {
  const double gain = 1.0 / (1.0 - snn.lif.beta());
  std::vector<Matrix> out = snn.weights;
  for (auto& w : out)
    for (double& x : w.data) x /= gain;
  return out;
}

namespace {

Dataset scaled_input(const Dataset& data, double lambda0) {
  if (lambda0 == 1.0 || !data.is_static()) return data;
  Dataset d = data;
  for (double& x : d.x) x /= lambda0;
  return d;
}

}  // namespace

FidelityResult rate_fidelity(const Network& snn, const AnnModel& model, const CalibrationStats& stats,
                             const Dataset& probe_raw, int window, InputMode mode,
                             const EncoderConfig& enc) {
  const Dataset probe = scaled_input(probe_raw, stats.lambda.front());
  const Simulator sim(snn);
  const std::size_t n_layers = model.layer_sizes.size();
  std::vector<double> rates;
  std::vector<double> targets;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    SimTrace trace;
    if (mode == InputMode::analog_current) {
      AnalogInput in;
      const auto f = probe.features(i);
      in.values.assign(f.begin(), f.end());
      trace = sim.run(in, window);
    } else {
      trace = sim.run(encode_sample(probe, i, encoder_for_window(enc, window), kEvalStream), window);
    }
    const AnnForward f = ann_forward(model, probe_raw.features(i));
    for (std::size_t l = 1; l + 1 < n_layers; ++l) {
      const auto counts = trace.layers[l].unit_counts();
      for (std::size_t u = 0; u < counts.size(); ++u) {
        rates.push_back(static_cast<double>(counts[u]) / static_cast<double>(window));
        targets.push_back(f.activations[l][u] / stats.lambda[l]);
      }
    }
  }
  FidelityResult r;
  r.window = window;
  const std::size_t n = rates.size();
  if (n == 0) return r;
  double mr = 0.0, mt = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mr += rates[k];
    mt += targets[k];
    r.mean_abs_error += std::abs(rates[k] - targets[k]);
  }
  mr /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  r.mean_abs_error /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (rates[k] - mr) * (targets[k] - mt);
    sxx += (rates[k] - mr) * (rates[k] - mr);
    syy += (targets[k] - mt) * (targets[k] - mt);
  }
  r.correlation = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  return r;
}

ConversionEval eval_converted(const Network& snn, const AnnModel& model, const CalibrationStats& stats,
                              const Dataset& data, const std::vector<int>& windows, InputMode mode,
                              const EncoderConfig& enc, std::size_t probe_size) {
  ConversionEval out;
  const Dataset scaled = scaled_input(data, stats.lambda.front());
  const Dataset probe = data.head(probe_size);
  for (int w : windows) {
    if (w < 1) throw ConfigError("eval_converted: windows must be >= 1");
    out.windows.push_back({w, evaluate_network(snn, scaled, enc, mode, w)});
    if (probe_size > 0) out.fidelity.push_back(rate_fidelity(snn, model, stats, probe, w, mode, enc));
  }
  return out;
}

}  // namespace snnbench
