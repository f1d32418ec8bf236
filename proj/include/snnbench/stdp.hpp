#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "snnbench/dataset.hpp"
#include "snnbench/evaluate.hpp"
#include "snnbench/network.hpp"
#include "snnbench/optim.hpp"

namespace snnbench {

struct StdpParams {
  double a_plus = 0.01;
  double a_minus = 0.012;
  double tau_plus = 20.0;
  double tau_minus = 20.0;
  double w_min = 0.0;
  double w_max = 1.0;
  double eta = 1.0;

  void validate() const;
};

// Pair rule for dt = t_post - t_pre (ms). Zero for simultaneous spikes.
double stdp_pair_update(double dt_pair, const StdpParams& p);

struct WtaConfig {
  // Hard inhibition window: when an excitatory neuron fires, all others are
  // reset and held silent for this long.
  double inhibition_ms = 5.0;
  // When > 0, each neuron's afferent weights are rescaled to this sum before
  // every sample (synaptic normalization). 0 disables it.
  double normalize_total = 0.0;
  // Same, but rescales the Euclidean norm of the afferent weights.
  double normalize_l2 = 0.0;
};

struct StdpConfig {
  StdpParams stdp;
  WtaConfig wta;
  LifParams lif;
  std::size_t n_neurons = 100;
  // Initial weights are uniform in [0, init_max].
  double init_max = 0.3;
  // When > 0, neuron i instead starts from the intensities of a randomly drawn
  // training sample times init_max (labels are not looked at).
  bool init_from_samples = false;
  // eta is multiplied by this after every epoch.
  double eta_decay = 1.0;
  int epochs = 1;
  std::uint64_t seed = 1;
  EncoderConfig encoder;
  // Divergence guard on the mean |dw| per sample.
  double max_mean_dw = 1.0;

  void validate() const;
};

struct NeuronLabels {
  std::vector<int> labels;
  // Neurons that never responded during labelling (labelled 0).
  std::vector<std::uint8_t> flagged;
};

// Single plastic layer (input -> excitatory) plus its readout labels.
struct StdpModel {
  Network net;
  NeuronLabels labels;
  WtaConfig wta;
};

StdpModel stdp_init(std::size_t n_inputs, const StdpConfig& cfg);
// Honors init_from_samples; otherwise identical to the overload above.
StdpModel stdp_init(const Dataset& train, const StdpConfig& cfg);

// Online trace state. Traces decay once per step, weight changes read the
// traces before the current step's spikes are added, so simultaneous pre and
// post spikes leave the weight unchanged.
class StdpTraces {
 public:
  StdpTraces(std::size_t n_pre, std::size_t n_post, const StdpParams& p, double dt);

  void reset();
  void decay();
  // Applies this step's updates to wt (n_pre x n_post, i.e. transposed
  // weights) and then adds the spikes to the traces. Returns summed |dw|.
  double apply(Matrix& wt, std::span<const std::uint8_t> pre_spikes,
               std::span<const std::size_t> post_spikes);

 private:
  StdpParams p_;
  double decay_pre_;
  double decay_post_;
  std::vector<double> pre_;
  std::vector<double> post_;
  bool post_active_ = false;
};

// Weights after running the trace rule over given pre/post rasters with no
// neuron dynamics (weights[i][j], i = post unit, j = pre unit).
Matrix stdp_apply_rasters(const Matrix& weights, const SpikeRaster& pre, const SpikeRaster& post,
                          const StdpParams& p, double dt = 1.0);

// Exponential pre/post trace implementation of the pair rule over one
// presentation; weights are updated in place (weights[i][j], i = neuron).
// Returns the summed |dw| of the presentation.
double stdp_present(Matrix& weights, const SpikeRaster& input, const StdpParams& p,
                    const WtaConfig& wta, const LifParams& lif,
                    std::vector<std::uint64_t>* post_counts = nullptr);

// Frozen-weight response (spike count per excitatory neuron) to one input.
std::vector<std::uint64_t> stdp_response(const StdpModel& model, const SpikeRaster& input);

struct StdpEpochStats {
  int epoch = 0;
  double mean_abs_dw = 0.0;
  std::uint64_t post_spikes = 0;
  // Neurons that fired at least once during the epoch.
  std::size_t active_neurons = 0;
};

// One unsupervised pass over `data` (labels unused).
StdpEpochStats stdp_train_epoch(StdpModel& model, const Dataset& data, const StdpConfig& cfg, int epoch);

// Argmax-response class per neuron; ties to the lowest class, silent neurons
// get class 0 and are flagged. counts is n_neurons x n_classes.
NeuronLabels assign_labels(const std::vector<std::vector<std::uint64_t>>& counts);

// Per-neuron, per-class response counts with plasticity frozen.
std::vector<std::vector<std::uint64_t>> stdp_class_responses(const StdpModel& model, const Dataset& data,
                                                           const EncoderConfig& enc, std::uint64_t stream);

struct StdpDecision {
  std::size_t cls = 0;
  bool silent = false;
};

// Class whose neurons have the highest summed spike count (ties to the
// lowest class).
StdpDecision stdp_classify(const StdpModel& model, std::span<const std::uint64_t> response,
                           std::size_t n_classes);
StdpDecision stdp_classify(const StdpModel& model, const SpikeRaster& input, std::size_t n_classes);

// Accuracy, latency (first excitatory spike), spikes and synops on the
// shared evaluation encoding.
InferenceStats stdp_inference(const StdpModel& model, const Dataset& data, const EncoderConfig& enc);

double stdp_evaluate(const StdpModel& model, const Dataset& data, const EncoderConfig& enc);

struct StdpPass {
  int pass = 0;
  double calib_acc = 0.0;
  double test_acc = 0.0;
  StdpEpochStats train;
  double wall_clock_s = 0.0;
};

// Train epochs; after each one, relabel on `calib` and evaluate on `test`.
std::vector<StdpPass> train_stdp(StdpModel& model, const Dataset& train, const Dataset& calib,
                                 const Dataset& test, const StdpConfig& cfg,
                                 const std::function<void(const StdpPass&)>& on_pass = {});

}  // namespace snnbench
