#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace snnbench {

enum class OptimizerKind { sgd, momentum_sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Multiplicative step-size decay applied after every epoch.
  double lr_decay = 1.0;

  void validate() const;
};

// First-order optimizer over a fixed list of parameter blocks. The moment
// buffers are public so checkpoints can store them.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const std::vector<std::size_t>& block_sizes);

  // params[k] -= update(grads[k]); lr overrides cfg.lr (for schedules).
  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads, double lr);

  const OptimizerConfig& config() const { return cfg_; }

  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long t = 0;

 private:
  OptimizerConfig cfg_;
};

// One point of a training curve.
struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double wall_clock_s = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

}  // namespace snnbench
