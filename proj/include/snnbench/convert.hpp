#pragma once

#include <string>
#include <vector>

#include "snnbench/annref.hpp"
#include "snnbench/evaluate.hpp"
#include "snnbench/network.hpp"

namespace snnbench {

// Per-layer activation scale used for weight/threshold balancing.
// lambda[0] describes the raw input, lambda[l] the output of ANN layer l.
struct CalibrationStats {
  std::vector<double> lambda;
  std::size_t samples = 0;
  double percentile = 99.9;
};

// Inclusive linear-interpolation percentile (p in [0, 100]) of `values`.
// Reorders its argument.
double percentile_linear(std::vector<double>& values, double p);

// Percentile of every activation observed in each layer over the calibration
// samples. Output logits are rectified first, since spike rates cannot be
// negative. Throws CalibrationError when a layer never activates.
CalibrationStats calibrate(const AnnModel& model, const Dataset& calib, double percentile = 99.9);

struct ConversionOptions {
  // How the first layer will be driven. Rate-encoded input arrives at
  // input_rate spikes per step for a unit intensity, so the first layer is
  // additionally divided by input_rate.
  InputMode input_mode = InputMode::analog_current;
  double input_rate = 0.2;
};

// Weight/threshold balancing: W'_l = g * W_l * lambda_{l-1} / lambda_l and
// b'_l = g * b_l / lambda_l with the membrane gain g = 1 / (1 - beta), so one
// unit of normalized activation delivers one threshold of charge per step.
// Thresholds stay at lif.v_th (must be 1).
Network convert(const AnnModel& model, const CalibrationStats& stats, const LifParams& lif = {},
                const ConversionOptions& opts = {});

// Weights and biases of `snn` divided by the membrane gain; equals the
// plain lambda-balanced ANN parameters.
std::vector<Matrix> balanced_weights(const Network& snn);

struct WindowResult {
  int window = 0;
  InferenceStats stats;
};

struct FidelityResult {
  int window = 0;
  // Pearson correlation between hidden firing rates (spikes / window) and
  // lambda-scaled ANN activations over (probe sample, hidden unit) pairs.
  double correlation = 0.0;
  double mean_abs_error = 0.0;
};

struct ConversionEval {
  std::vector<WindowResult> windows;
  std::vector<FidelityResult> fidelity;
};

// Rate fidelity of the hidden layers of a converted network on `probe`.
FidelityResult rate_fidelity(const Network& snn, const AnnModel& model, const CalibrationStats& stats,
                             const Dataset& probe, int window, InputMode mode,
                             const EncoderConfig& enc);

// Accuracy, spikes and latency for every window, plus rate fidelity on the
// first `probe_size` test samples.
ConversionEval eval_converted(const Network& snn, const AnnModel& model, const CalibrationStats& stats,
                              const Dataset& data, const std::vector<int>& windows, InputMode mode,
                              const EncoderConfig& enc, std::size_t probe_size = 200);

}  // namespace snnbench
