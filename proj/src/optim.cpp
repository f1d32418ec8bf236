#include "snnbench/optim.hpp"

#include <cmath>

#include "snnbench/error.hpp"

namespace snnbench {

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum_sgd: return "momentum_sgd";
    case OptimizerKind::adam: return "adam";
  }
  return "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "momentum_sgd") return OptimizerKind::momentum_sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("optimizer: step size must be >= 0");
  if (!(lr_decay > 0.0)) throw ConfigError("optimizer: lr_decay must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("optimizer: momentum must be in [0,1)");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("optimizer: betas must be in [0,1)");
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const std::vector<std::size_t>& block_sizes)
    : cfg_(cfg) {
  cfg_.validate();
  for (auto n : block_sizes) {
    m.emplace_back(n, 0.0);
    v.emplace_back(cfg.kind == OptimizerKind::adam ? n : 0, 0.0);
  }
}

void Optimizer::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads, double lr) {
  if (params.size() != m.size() || grads.size() != m.size())
    throw DimensionError("Optimizer::step: block count mismatch");
  ++t;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    if (p.size() != m[k].size() || g.size() != m[k].size())
      throw DimensionError("Optimizer::step: block size mismatch");
    switch (cfg_.kind) {
      case OptimizerKind::sgd:
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        break;
      case OptimizerKind::momentum_sgd:
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[k][i] = cfg_.momentum * m[k][i] + g[i];
          p[i] -= lr * m[k][i];
        }
        break;
      case OptimizerKind::adam:
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[k][i] = cfg_.beta1 * m[k][i] + (1.0 - cfg_.beta1) * g[i];
          v[k][i] = cfg_.beta2 * v[k][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
          p[i] -= lr * (m[k][i] / bc1) / (std::sqrt(v[k][i] / bc2) + cfg_.eps);
        }
        break;
    }
  }
}

}  // namespace snnbench
