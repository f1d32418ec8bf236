#pragma once

#include <cstdint>
#include <string>

#include "snnbench/codec.hpp"
#include "snnbench/dataset.hpp"
#include "snnbench/network.hpp"

namespace snnbench {

enum class InputMode { spikes, analog_current };

std::string to_string(InputMode m);
InputMode input_mode_from_string(const std::string& s);

// Test-set statistics of one spiking network.
struct InferenceStats {
  std::size_t samples = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // count-decoded, %
  std::size_t silent = 0;  // all-zero output, decoded as class 0
  std::size_t first_spike_correct = 0;
  std::size_t decided = 0;  // samples with at least one output spike
  double latency_steps_mean = 0.0;  // over decided samples
  double spikes_mean = 0.0;  // hidden + output
  double spikes_with_input_mean = 0.0;
  double synops_mean = 0.0;
  double sim_seconds = 0.0;

  double decided_fraction() const {
    return samples ? static_cast<double>(decided) / static_cast<double>(samples) : 0.0;
  }
};

// Encoder stretched to cover `window` steps. Rate coding draws step by step,
// so the first steps are the same whatever the window.
EncoderConfig encoder_for_window(const EncoderConfig& enc, int window);

// Runs every sample of `data` through the simulator for `window` steps
// (enc.steps() when window <= 0). Spike inputs use the shared evaluation
// stream; analog mode feeds normalized features as constant current.
InferenceStats evaluate_network(const Network& net, const Dataset& data, const EncoderConfig& enc,
                                InputMode mode = InputMode::spikes, int window = 0);

}  // namespace snnbench
