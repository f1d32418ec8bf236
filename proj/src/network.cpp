#include "snnbench/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "snnbench/error.hpp"

namespace snnbench {

SpikeRaster::SpikeRaster(std::size_t n_units, std::size_t n_steps)
    : n_units_(n_units), n_steps_(n_steps), bits_(n_units * n_steps, 0) {}

std::uint64_t SpikeRaster::total() const {
  return static_cast<std::uint64_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::uint64_t> SpikeRaster::unit_counts() const {
  std::vector<std::uint64_t> counts(n_units_, 0);
  for (std::size_t t = 0; t < n_steps_; ++t) {
    const std::uint8_t* row = bits_.data() + t * n_units_;
    for (std::size_t i = 0; i < n_units_; ++i) counts[i] += row[i];
  }
  return counts;
}

void Topology::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("Topology: need at least 2 layers");
  for (auto s : layer_sizes)
    if (s == 0) throw ConfigError("Topology: layer sizes must be >= 1");
  if (!delays.empty()) {
    if (delays.size() != num_connections())
      throw ConfigError("Topology: expected one delay per connection layer");
    for (int d : delays)
      if (d < 1) throw ConfigError("Topology: delays must be >= 1");
  }
}

Network Network::zeros(const Topology& topology, const LifParams& lif) {
  topology.validate();
  Network net;
  net.topology = topology;
  net.lif = lif;
  for (std::size_t l = 0; l < topology.num_connections(); ++l)
    net.weights.emplace_back(topology.layer_sizes[l + 1], topology.layer_sizes[l]);
  return net;
}

void Network::validate() const {
  topology.validate();
  lif.validate();
  const auto& sizes = topology.layer_sizes;
  if (weights.size() != topology.num_connections())
    throw DimensionError("Network: expected " + std::to_string(topology.num_connections()) +
                         " weight matrices, got " + std::to_string(weights.size()));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Matrix& w = weights[l];
    if (w.rows != sizes[l + 1] || w.cols != sizes[l] || w.data.size() != w.rows * w.cols)
      throw DimensionError("Network: weight matrix " + std::to_string(l) + " has shape " +
                           std::to_string(w.rows) + "x" + std::to_string(w.cols) + ", expected " +
                           std::to_string(sizes[l + 1]) + "x" + std::to_string(sizes[l]));
    for (double x : w.data)
      if (!std::isfinite(x))
        throw NumericError("Network: non-finite weight in layer " + std::to_string(l));
  }
  if (!biases.empty()) {
    if (biases.size() != weights.size())
      throw DimensionError("Network: biases must be empty or one vector per connection layer");
    for (std::size_t l = 0; l < biases.size(); ++l) {
      if (!biases[l].empty() && biases[l].size() != sizes[l + 1])
        throw DimensionError("Network: bias vector " + std::to_string(l) + " has wrong length");
      for (double b : biases[l])
        if (!std::isfinite(b)) throw NumericError("Network: non-finite bias");
    }
  }
}

Simulator::Simulator(const Network& net) : net_(net) {
  net_.validate();
  weights_t_.reserve(net_.weights.size());
  for (const auto& w : net_.weights) weights_t_.push_back(w.transposed());
}

SimTrace Simulator::run(const SpikeRaster& input, int window, const SimOptions& opts) const {
  return run_impl(&input, nullptr, window, opts);
}

SimTrace Simulator::run(const AnalogInput& input, int window, const SimOptions& opts) const {
  return run_impl(nullptr, &input, window, opts);
}

SimTrace Simulator::run_impl(const SpikeRaster* spikes, const AnalogInput* analog, int window,
                             const SimOptions& opts) const {
  const auto start = std::chrono::steady_clock::now();
  const auto& sizes = net_.topology.layer_sizes;
  const std::size_t n_layers = sizes.size();
  if (window < 1) throw ConfigError("simulate: window must be >= 1");
  const auto steps = static_cast<std::size_t>(window);
  if (spikes && spikes->n_units() != sizes[0])
    throw DimensionError("simulate: input raster has " + std::to_string(spikes->n_units()) +
                         " units, network expects " + std::to_string(sizes[0]));
  if (analog) {
    if (analog->values.size() != sizes[0])
      throw DimensionError("simulate: analog input has " + std::to_string(analog->values.size()) +
                           " values, network expects " + std::to_string(sizes[0]));
    for (double x : analog->values)
      if (!std::isfinite(x)) throw NumericError("simulate: non-finite analog input");
  }

  // Full rasters are kept internally: delays need history and they are small.
  std::vector<SpikeRaster> rasters;
  rasters.reserve(n_layers);
  for (auto s : sizes) rasters.emplace_back(s, steps);
  if (spikes) {
    const std::size_t copy = std::min(steps, spikes->n_steps());
    for (std::size_t t = 0; t < copy; ++t) {
      auto src = spikes->step(t);
      std::copy(src.begin(), src.end(), rasters[0].step(t).begin());
    }
  }

  std::vector<LifState> states;
  std::vector<std::vector<double>> drive(n_layers);
  for (std::size_t l = 1; l < n_layers; ++l) {
    states.emplace_back(sizes[l], net_.lif.v_rest);
    drive[l].assign(sizes[l], 0.0);
  }

  std::vector<double> analog_drive;
  if (analog) {
    const Matrix& w = net_.weights[0];
    analog_drive.assign(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
      auto row = w.row(i);
      analog_drive[i] = std::inner_product(row.begin(), row.end(), analog->values.begin(), 0.0);
    }
  }

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t l = 1; l < n_layers; ++l) {
      const std::size_t c = l - 1;
      auto& d = drive[l];
      if (net_.has_bias(c))
        std::copy(net_.biases[c].begin(), net_.biases[c].end(), d.begin());
      else
        std::fill(d.begin(), d.end(), 0.0);
      const auto delay = static_cast<std::size_t>(net_.topology.delay(c));
      if (t >= delay) {
        if (c == 0 && analog) {
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += analog_drive[i];
        } else {
          auto pre = rasters[c].step(t - delay);
          const Matrix& wt = weights_t_[c];
          for (std::size_t j = 0; j < pre.size(); ++j) {
            if (!pre[j]) continue;
            const double* col = wt.data.data() + j * wt.cols;
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += col[i];
          }
        }
      }
      lif_step(states[c], d, net_.lif, rasters[l].step(t));
    }
  }

  SimTrace trace;
  trace.spikes_per_layer.reserve(n_layers);
  for (const auto& r : rasters) trace.spikes_per_layer.push_back(r.total());
  for (std::size_t c = 0; c + 1 < n_layers; ++c)
    trace.synops.push_back(trace.spikes_per_layer[c] * sizes[c + 1]);
  const SpikeRaster& out = rasters.back();
  trace.output_counts = out.unit_counts();
  trace.output_first_spike.assign(out.n_units(), -1);
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = out.step(t);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] && trace.output_first_spike[i] < 0) trace.output_first_spike[i] = static_cast<int>(t);
  }
  if (opts.record_rasters) trace.layers = std::move(rasters);
  trace.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

SimTrace simulate(const Network& net, const SpikeRaster& input, int window,
                  const SimOptions& opts) {
  return Simulator(net).run(input, window, opts);
}

SimTrace simulate(const Network& net, const AnalogInput& input, int window,
                  const SimOptions& opts) {
  return Simulator(net).run(input, window, opts);
}

std::uint64_t synaptic_op_count(const SimTrace& trace) {
  return std::accumulate(trace.synops.begin(), trace.synops.end(), std::uint64_t{0});
}

std::vector<std::string> layer_names(std::size_t num_layers) {
  std::vector<std::string> names;
  if (num_layers == 0) return names;
  names.emplace_back("input");
  for (std::size_t l = 1; l + 1 < num_layers; ++l) names.push_back("hidden" + std::to_string(l));
  if (num_layers > 1) names.emplace_back("output");
  return names;
}

std::uint64_t total_spike_count(const SimTrace& trace, const std::vector<std::string>& layers) {
  const std::size_t n = trace.spikes_per_layer.size();
  if (layers.empty()) {
    std::uint64_t s = 0;
    for (std::size_t l = 1; l < n; ++l) s += trace.spikes_per_layer[l];
    return s;
  }
  const auto names = layer_names(n);
  std::uint64_t s = 0;
  for (const auto& name : layers) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ConfigError("total_spike_count: unknown layer '" + name + "'");
    s += trace.spikes_per_layer[static_cast<std::size_t>(it - names.begin())];
  }
  return s;
}

}  // namespace snnbench
