#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snnbench/dataset.hpp"
#include "snnbench/optim.hpp"
#include "snnbench/tensor.hpp"

namespace snnbench {

// Dense MLP: ReLU on hidden layers, linear logits on the output layer.
struct AnnModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;  // fan_out x fan_in
  std::vector<std::vector<double>> biases;

  std::size_t num_connections() const { return weights.size(); }
  void validate() const;

  bool operator==(const AnnModel&) const = default;
};

// He-uniform weights, zero biases.
AnnModel ann_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

struct AnnForward {
  // activations[0] is the input, activations[l] the post-ReLU output of
  // layer l; the final entry holds the logits.
  std::vector<std::vector<double>> activations;

  const std::vector<double>& logits() const { return activations.back(); }
};

AnnForward ann_forward(const AnnModel& model, std::span<const double> x);

struct AnnGradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  double loss = 0.0;
  std::size_t correct = 0;
};

// Softmax cross-entropy gradient averaged over the given samples.
AnnGradients ann_grad(const AnnModel& model, const Dataset& data, std::span<const std::size_t> indices);

// Mean softmax cross-entropy over the given samples.
double ann_loss(const AnnModel& model, const Dataset& data, std::span<const std::size_t> indices);

struct AnnTrainConfig {
  OptimizerConfig opt;
  int epochs = 20;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
};

double ann_evaluate(const AnnModel& model, const Dataset& data);

// Mini-batch training; returns one EpochStats per epoch and calls `on_epoch`
// after each one.
std::vector<EpochStats> ann_train(AnnModel& model, const Dataset& train, const Dataset& test,
                                  const AnnTrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace snnbench
