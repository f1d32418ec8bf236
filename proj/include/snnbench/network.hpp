#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnbench/neuron.hpp"
#include "snnbench/tensor.hpp"

namespace snnbench {

// Binary spike matrix s_i(t) over n_units x n_steps, stored step-major.
class SpikeRaster {
 public:
  SpikeRaster() = default;
  SpikeRaster(std::size_t n_units, std::size_t n_steps);

  std::size_t n_units() const { return n_units_; }
  std::size_t n_steps() const { return n_steps_; }

  bool at(std::size_t unit, std::size_t step) const { return bits_[step * n_units_ + unit] != 0; }
  void set(std::size_t unit, std::size_t step, bool value = true) {
    bits_[step * n_units_ + unit] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> step(std::size_t t) const {
    return {bits_.data() + t * n_units_, n_units_};
  }
  std::span<std::uint8_t> step(std::size_t t) { return {bits_.data() + t * n_units_, n_units_}; }

  std::uint64_t total() const;
  std::vector<std::uint64_t> unit_counts() const;

  bool operator==(const SpikeRaster&) const = default;

 private:
  std::size_t n_units_ = 0;
  std::size_t n_steps_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Topology {
  std::vector<std::size_t> layer_sizes;
  // One delay (in steps) per connection layer; empty means all 1.
  std::vector<int> delays;

  std::size_t num_layers() const { return layer_sizes.size(); }
  std::size_t num_connections() const { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
  int delay(std::size_t connection) const { return delays.empty() ? 1 : delays[connection]; }
  void validate() const;

  bool operator==(const Topology&) const = default;
};

// Feedforward spiking network. weights[l] maps layer l to layer l+1 and has
// shape layer_sizes[l+1] x layer_sizes[l]. biases is either empty or holds one
// (possibly empty) constant-current vector per connection layer.
struct Network {
  Topology topology;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  LifParams lif;

  // Zero-initialised weights for the given topology.
  static Network zeros(const Topology& topology, const LifParams& lif = {});

  bool has_bias(std::size_t connection) const {
    return connection < biases.size() && !biases[connection].empty();
  }
  void validate() const;

  bool operator==(const Network&) const = default;
};

// Constant analog current injected into the first hidden layer every step,
// used by converted networks in place of input spikes.
struct AnalogInput {
  std::vector<double> values;
};

struct SimOptions {
  bool record_rasters = true;
};

struct SimTrace {
  // One raster per layer; layers[0] is the (possibly empty) input raster.
  // Empty when record_rasters is off.
  std::vector<SpikeRaster> layers;
  // Total spikes per layer (always recorded).
  std::vector<std::uint64_t> spikes_per_layer;
  // Synaptic operations per connection layer: spikes of the presynaptic layer
  // times its fan-out.
  std::vector<std::uint64_t> synops;
  // Output-layer spike counts per unit and first-spike step (-1 when silent).
  std::vector<std::uint64_t> output_counts;
  std::vector<int> output_first_spike;
  double wall_clock_s = 0.0;
};

// Clock-driven simulator. Precomputes a transposed copy of each weight matrix
// so a presynaptic spike adds one contiguous column. Immutable after
// construction, so one instance may be shared by several threads.
class Simulator {
 public:
  explicit Simulator(const Network& net);

  SimTrace run(const SpikeRaster& input, int window, const SimOptions& opts = {}) const;
  SimTrace run(const AnalogInput& input, int window, const SimOptions& opts = {}) const;

  const Network& network() const { return net_; }

 private:
  SimTrace run_impl(const SpikeRaster* spikes, const AnalogInput* analog, int window,
                    const SimOptions& opts) const;

  Network net_;
  std::vector<Matrix> weights_t_;
};

SimTrace simulate(const Network& net, const SpikeRaster& input, int window,
                  const SimOptions& opts = {});
SimTrace simulate(const Network& net, const AnalogInput& input, int window,
                  const SimOptions& opts = {});

std::uint64_t synaptic_op_count(const SimTrace& trace);

// Layer names are "input", "hidden1".."hiddenK" and "output".
std::vector<std::string> layer_names(std::size_t num_layers);

// Sum of spikes in the named layers. An empty selector means hidden+output.
// Throws ConfigError on an unknown name.
std::uint64_t total_spike_count(const SimTrace& trace, const std::vector<std::string>& layers = {});

}  // namespace snnbench
