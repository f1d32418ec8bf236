#include "snnbench/neuron.hpp"

#include <cmath>
#include <string>

#include "snnbench/error.hpp"

namespace snnbench {

void LifParams::validate() const {
  auto bad = [](const std::string& what) { throw ConfigError("LifParams: " + what); };
  if (!(tau_mem > 0.0) || !std::isfinite(tau_mem)) bad("tau_mem must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be positive");
  if (dt > tau_mem) bad("dt must not exceed tau_mem");
  if (!std::isfinite(v_th) || !std::isfinite(v_rest) || !std::isfinite(v_reset))
    bad("potentials must be finite");
  if (!(v_th > v_rest)) bad("v_th must exceed v_rest");
  if (v_reset > v_th) bad("v_reset must not exceed v_th");
  if (!(t_refrac >= 0.0) || !std::isfinite(t_refrac)) bad("t_refrac must be >= 0");
}

double LifParams::beta() const { return std::exp(-dt / tau_mem); }

int LifParams::refrac_steps() const {
  // Guard against t_refrac/dt landing a hair above an integer.
  const double ratio = t_refrac / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) < 1e-9) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(ratio));
}

void lif_step(LifState& state, std::span<const double> drive, const LifParams& params,
              std::span<std::uint8_t> spikes) {
  const std::size_t n = state.v.size();
  if (drive.size() != n || spikes.size() != n || state.refrac_left.size() != n) {
    throw DimensionError("lif_step: state has " + std::to_string(n) + " neurons, drive has " +
                         std::to_string(drive.size()));
  }
  const double beta = params.beta();
  const double gain = 1.0 - beta;
  const int refrac = params.refrac_steps();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(drive[i])) {
      throw NumericError("lif_step: non-finite drive at neuron " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (state.refrac_left[i] > 0) {
      --state.refrac_left[i];
      spikes[i] = 0;
      continue;
    }
    const double v = params.v_rest + beta * (state.v[i] - params.v_rest) + gain * drive[i];
    if (v >= params.v_th) {
      spikes[i] = 1;
      state.v[i] = params.v_reset;
      state.refrac_left[i] = refrac;
    } else {
      spikes[i] = 0;
      state.v[i] = v;
    }
  }
}

std::pair<LifState, std::vector<std::uint8_t>> lif_step(const LifState& state,
                                                        std::span<const double> drive,
                                                        const LifParams& params) {
  LifState next = state;
  std::vector<std::uint8_t> spikes(state.size(), 0);
  lif_step(next, drive, params, spikes);
  return {std::move(next), std::move(spikes)};
}

std::vector<double> lif_decay_trajectory(double v0, int steps, const LifParams& params) {
  params.validate();
  if (steps < 0) throw ConfigError("lif_decay_trajectory: steps must be >= 0");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  const double beta = params.beta();
  double v = v0;
  for (int k = 0; k < steps; ++k) {
    v = params.v_rest + beta * (v - params.v_rest) + (1.0 - beta) * 0.0;
    out.push_back(v);
  }
  return out;
}

}  // namespace snnbench
