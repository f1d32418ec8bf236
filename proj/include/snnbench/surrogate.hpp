#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnbench/codec.hpp"
#include "snnbench/dataset.hpp"
#include "snnbench/network.hpp"
#include "snnbench/optim.hpp"

namespace snnbench {

enum class SurrogateKind { fast_sigmoid, piecewise_linear, exponential };
enum class LossKind { count_cross_entropy, membrane_cross_entropy };

// Spiking uses the Heaviside spike with hard reset and refractoriness.
// Relaxed replaces the spike by the smooth surrogate activation in both
// passes and drops reset/refractoriness; its gradient is exact, which makes it
// checkable against finite differences.
enum class ForwardMode { spiking, relaxed };

std::string to_string(SurrogateKind k);
SurrogateKind surrogate_kind_from_string(const std::string& s);
std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::fast_sigmoid;
  double slope = 10.0;
  LossKind loss = LossKind::count_cross_entropy;
  OptimizerConfig opt;
  int epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  EncoderConfig encoder;
  // Uniform init half-width is init_gain * sqrt(3 / fan_in).
  double init_gain = 1.0;
  // Abort when the loss stops being finite or exceeds this bound.
  double max_loss = 1e6;

  void validate() const;
};

// Pseudo-derivative of the spike function at u = v - v_th; peaks at 1 for u = 0.
double surrogate_derivative(double u, SurrogateKind kind, double slope);
// Antiderivative of surrogate_derivative with value 0 at u = 0; the smooth
// spike used by ForwardMode::relaxed.
double surrogate_activation(double u, SurrogateKind kind, double slope);

// Random feedforward network for surrogate training.
Network surrogate_init(const Topology& topology, const LifParams& lif, std::uint64_t seed,
                       double init_gain = 1.0);

// Per-step record of one forward pass, sufficient for the backward pass.
struct GradTape {
  int steps = 0;
  // Per connection layer c (feeding layer c+1): T x N_{c+1} row-major.
  std::vector<std::vector<double>> u;     // pre-reset membrane (v_reset when gated)
  std::vector<std::vector<double>> s;     // spike value (0/1 or relaxed activation)
  std::vector<std::vector<std::uint8_t>> gate;  // 1 when the neuron integrated this step
  std::vector<double> logits;
  double loss = 0.0;
  std::size_t predicted = 0;
};

struct NetGradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;  // empty vectors for bias-free layers
  double loss = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

NetGradients zero_gradients(const Network& net);

// Forward pass recording a tape. The spiking forward is identical to the
// Simulator's dynamics.
GradTape forward_tape(const Network& net, const SpikeRaster& input, int label,
                      const SurrogateConfig& cfg, ForwardMode mode = ForwardMode::spiking);

// Gradient of the loss w.r.t. every weight, averaged over the batch. The
// reset branch is treated as a constant (no gradient through the reset).
NetGradients bptt_grad(const Network& net, std::span<const SpikeRaster> inputs,
                       std::span<const int> labels, const SurrogateConfig& cfg,
                       ForwardMode mode = ForwardMode::spiking);

// Loss of one input under the given forward mode (for finite differences).
double surrogate_loss(const Network& net, const SpikeRaster& input, int label,
                      const SurrogateConfig& cfg, ForwardMode mode);

// Applies one optimizer step of the given gradients.
void apply_gradients(Network& net, const NetGradients& grads, Optimizer& opt, double lr);
Optimizer make_optimizer(const Network& net, const OptimizerConfig& cfg);

// Count-decoded test accuracy (%) with the encoder's evaluation stream.
double snn_evaluate(const Network& net, const Dataset& data, const EncoderConfig& enc);

// Mini-batch BPTT training. Training inputs are re-encoded every epoch from a
// stream derived from (seed, epoch).
std::vector<EpochStats> train_surrogate(Network& net, const Dataset& train, const Dataset& test,
                                        const SurrogateConfig& cfg,
                                        const EpochCallback& on_epoch = {},
                                        Optimizer* optimizer = nullptr);

}  // namespace snnbench
