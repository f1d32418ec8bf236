#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace snnbench {

// Discrete-time leaky integrate-and-fire parameters. Times are in ms,
// potentials in dimensionless membrane units.
struct LifParams {
  double tau_mem = 20.0;
  double v_th = 1.0;
  double v_reset = 0.0;
  double v_rest = 0.0;
  double t_refrac = 5.0;
  double dt = 1.0;

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  // Per-step leak factor exp(-dt / tau_mem).
  double beta() const;

  // Number of silent steps after a spike, ceil(t_refrac / dt).
  int refrac_steps() const;

  bool operator==(const LifParams&) const = default;
};

struct LifState {
  std::vector<double> v;
  std::vector<int> refrac_left;

  LifState() = default;
  explicit LifState(std::size_t n, double v0 = 0.0) : v(n, v0), refrac_left(n, 0) {}

  std::size_t size() const { return v.size(); }
};

// Advances every neuron by one step in place. `spikes` receives 1 for neurons
// that fired this step and 0 otherwise.
//
// Non-refractory neurons integrate v' = v_rest + beta*(v - v_rest) + (1-beta)*I.
// A neuron with v' >= v_th fires, is set to v_reset and stays silent for the
// next refrac_steps() steps. Refractory neurons neither integrate nor fire.
void lif_step(LifState& state, std::span<const double> drive, const LifParams& params,
              std::span<std::uint8_t> spikes);

// Value-returning form of lif_step.
std::pair<LifState, std::vector<std::uint8_t>> lif_step(const LifState& state,
                                                        std::span<const double> drive,
                                                        const LifParams& params);

// Potentials after 1..steps zero-input steps starting from v0, obtained by
// repeated multiplication with beta (identical to repeated lif_step with I=0
// while below threshold).
std::vector<double> lif_decay_trajectory(double v0, int steps, const LifParams& params);

}  // namespace snnbench
