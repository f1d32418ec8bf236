#include "snnbench/metrics.hpp"

#include <cmath>

#include "snnbench/error.hpp"

namespace snnbench {

void EnergyModel::validate() const {
  if (!(e_spike >= 0.0) || !(e_synapse >= 0.0) || !(ann_const >= 0.0))
    throw ConfigError("EnergyModel: constants must be >= 0");
}

double accuracy(std::uint64_t correct, std::uint64_t total) {
  if (total == 0) throw ConfigError("accuracy: total must be > 0");
  if (correct > total) throw ConfigError("accuracy: correct exceeds total");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> latency_ms(std::optional<int> t_decision, int t0, double dt) {
  if (!t_decision) return std::nullopt;
  return static_cast<double>(*t_decision - t0) * dt;
}

double energy_mj(double spikes, double synops, const EnergyModel& m) {
  return m.e_spike * spikes + m.e_synapse * synops;
}

double ann_energy_mj(const EnergyModel& m) { return m.ann_const; }

double energy_efficiency(double accuracy_pct, double energy) {
  if (!(energy > 0.0)) throw ConfigError("energy_efficiency: energy must be > 0");
  return accuracy_pct / energy;
}

std::optional<int> convergence_epoch(std::span<const double> curve, const ConvergenceQuery& q) {
  if (!std::isfinite(q.target)) throw ConfigError("convergence_epoch: target must be finite");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const bool hit = q.direction == Direction::at_least ? curve[i] >= q.target : curve[i] <= q.target;
    if (hit) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ConfigError("summarize: no values");
  Summary s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) {
    s.std_undefined = true;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

const std::vector<std::string>& numeric_metric_names() {
  static const std::vector<std::string> names = {
      "train_loss", "train_acc", "test_acc", "latency_ms_mean", "spikes_per_inference_mean",
      "synops_per_inference_mean", "energy_mJ_mean", "efficiency", "wall_clock_s"};
  return names;
}

double metric_value(const RunRecord& r, const std::string& name) {
  if (name == "train_loss") return r.train_loss;
  if (name == "train_acc") return r.train_acc;
  if (name == "test_acc") return r.test_acc;
  if (name == "latency_ms_mean") return r.latency_ms_mean;
  if (name == "spikes_per_inference_mean") return r.spikes_per_inference_mean;
  if (name == "synops_per_inference_mean") return r.synops_per_inference_mean;
  if (name == "energy_mJ_mean") return r.energy_mJ_mean;
  if (name == "efficiency") return r.efficiency;
  if (name == "wall_clock_s") return r.wall_clock_s;
  if (name == "epoch") return r.epoch;
  throw ConfigError("unknown metric '" + name + "'");
}

const Summary& MetricsReport::at(const std::string& metric) const {
  for (const auto& [name, s] : aggregates)
    if (name == metric) return s;
  throw ConfigError("MetricsReport: no aggregate for '" + metric + "'");
}

MetricsReport aggregate(std::span<const RunRecord> runs) {
  if (runs.empty()) throw ConfigError("aggregate: no runs");
  MetricsReport report;
  report.runs.assign(runs.begin(), runs.end());
  std::vector<double> values(runs.size());
  for (const auto& name : numeric_metric_names()) {
    for (std::size_t i = 0; i < runs.size(); ++i) values[i] = metric_value(runs[i], name);
    report.aggregates.emplace_back(name, summarize(values));
  }
  return report;
}

}  // namespace snnbench
