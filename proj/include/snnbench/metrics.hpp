#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace snnbench {

// Per-spike and per-synaptic-operation energy, in mJ. The defaults are
// illustrative constants, not measurements.
struct EnergyModel {
  double e_spike = 1.0e-3;
  double e_synapse = 2.5e-7;
  // Fixed per-inference energy for spike-free baselines.
  double ann_const = 200.0;

  void validate() const;
};

// Percentage of correct predictions. Throws ConfigError when total == 0 or
// correct > total.
double accuracy(std::uint64_t correct, std::uint64_t total);

// (t_decision - t0) * dt in ms; nullopt propagates "no decision".
std::optional<double> latency_ms(std::optional<int> t_decision, int t0, double dt);

// e_spike * S + e_synapse * C.
double energy_mj(double spikes, double synops, const EnergyModel& m);
// Energy reported for a spike-free model.
double ann_energy_mj(const EnergyModel& m);

// Accuracy per mJ (multiply by 1000 for accuracy per joule).
double energy_efficiency(double accuracy_pct, double energy_mj);

enum class Direction { at_least, at_most };

struct ConvergenceQuery {
  std::string metric;
  double target = 0.0;
  Direction direction = Direction::at_least;
};

// First 1-based epoch whose value meets the target, or nullopt.
std::optional<int> convergence_epoch(std::span<const double> curve, const ConvergenceQuery& q);

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string model;
  std::string dataset;
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double latency_ms_mean = 0.0;
  double spikes_per_inference_mean = 0.0;
  double synops_per_inference_mean = 0.0;
  double energy_mJ_mean = 0.0;
  double efficiency = 0.0;
  double wall_clock_s = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  // Set when n < 2 and the std is reported as 0 by convention.
  bool std_undefined = false;
};

// Arithmetic mean and sample (n-1) standard deviation.
Summary summarize(std::span<const double> values);

struct MetricsReport {
  std::vector<RunRecord> runs;
  // Keyed by metric name, in a fixed order.
  std::vector<std::pair<std::string, Summary>> aggregates;

  const Summary& at(const std::string& metric) const;
};

// Aggregates every numeric metric of the given runs. Throws ConfigError on an
// empty input.
MetricsReport aggregate(std::span<const RunRecord> runs);

// Names of the numeric RunRecord columns in CSV order.
const std::vector<std::string>& numeric_metric_names();
double metric_value(const RunRecord& r, const std::string& name);

}  // namespace snnbench
