#include "snnbench/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "snnbench/error.hpp"
#include "snnbench/evaluate.hpp"

namespace snnbench {

std::string to_string(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::fast_sigmoid: return "fast_sigmoid";
    case SurrogateKind::piecewise_linear: return "piecewise_linear";
    case SurrogateKind::exponential: return "exponential";
  }
  return "fast_sigmoid";
}

SurrogateKind surrogate_kind_from_string(const std::string& s) {
  if (s == "fast_sigmoid") return SurrogateKind::fast_sigmoid;
  if (s == "piecewise_linear") return SurrogateKind::piecewise_linear;
  if (s == "exponential") return SurrogateKind::exponential;
  throw ConfigError("unknown surrogate kind '" + s + "'");
}

std::string to_string(LossKind k) {
  return k == LossKind::count_cross_entropy ? "cross_entropy_on_counts"
                                            : "cross_entropy_on_mean_membrane";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "cross_entropy_on_counts") return LossKind::count_cross_entropy;
  if (s == "cross_entropy_on_mean_membrane") return LossKind::membrane_cross_entropy;
  throw ConfigError("unknown loss '" + s + "'");
}

void SurrogateConfig::validate() const {
  if (!(slope > 0.0) || !std::isfinite(slope)) throw ConfigError("surrogate: slope k must be > 0");
  opt.validate();
  if (epochs < 0) throw ConfigError("surrogate: epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("surrogate: batch size must be >= 1");
  encoder.validate();
}

double surrogate_derivative(double u, SurrogateKind kind, double slope) {
  const double a = std::abs(u);
  switch (kind) {
    case SurrogateKind::fast_sigmoid: {
      const double d = 1.0 + slope * a;
      return 1.0 / (d * d);
    }
    case SurrogateKind::piecewise_linear:
      return std::max(0.0, 1.0 - slope * a);
    case SurrogateKind::exponential:
      return std::exp(-slope * a);
  }
  return 0.0;
}

double surrogate_activation(double u, SurrogateKind kind, double slope) {
  const double a = std::abs(u);
  const double sign = u < 0.0 ? -1.0 : 1.0;
  switch (kind) {
    case SurrogateKind::fast_sigmoid:
      return u / (1.0 + slope * a);
    case SurrogateKind::piecewise_linear: {
      const double edge = 1.0 / slope;
      const double c = std::min(a, edge);
      return sign * (c - 0.5 * slope * c * c);
    }
    case SurrogateKind::exponential:
      return sign * (1.0 - std::exp(-slope * a)) / slope;
  }
  return 0.0;
}

Network surrogate_init(const Topology& topology, const LifParams& lif, std::uint64_t seed,
                       double init_gain) {
  Network net = Network::zeros(topology, lif);
  Rng rng(mix_seed(seed, 0x73676eULL));
  for (auto& w : net.weights) {
    const double limit = init_gain * std::sqrt(3.0 / static_cast<double>(w.cols));
    for (double& x : w.data) x = (2.0 * uniform01(rng) - 1.0) * limit;
  }
  return net;
}

NetGradients zero_gradients(const Network& net) {
  NetGradients g;
  for (std::size_t c = 0; c < net.weights.size(); ++c) {
    g.weights.emplace_back(net.weights[c].rows, net.weights[c].cols);
    g.biases.emplace_back(net.has_bias(c) ? net.weights[c].rows : 0, 0.0);
  }
  return g;
}

namespace {

// Weights transposed once per batch so the forward pass adds columns.
struct Context {
  const Network& net;
  const SurrogateConfig& cfg;
  std::vector<Matrix> wt;

  Context(const Network& n, const SurrogateConfig& c) : net(n), cfg(c) {
    for (const auto& w : net.weights) wt.push_back(w.transposed());
  }
};

double log_sum_exp(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return std::log(sum) + zmax;
}

GradTape run_forward(const Context& ctx, const SpikeRaster& input, int label, ForwardMode mode) {
  const Network& net = ctx.net;
  const auto& sizes = net.topology.layer_sizes;
  const std::size_t n_conn = net.weights.size();
  if (input.n_units() != sizes[0])
    throw DimensionError("forward_tape: input raster has " + std::to_string(input.n_units()) +
                         " units, network expects " + std::to_string(sizes[0]));
  const int steps = ctx.cfg.encoder.steps();
  const auto T = static_cast<std::size_t>(steps);
  const LifParams& lif = net.lif;
  const double beta = lif.beta();
  const double gain = 1.0 - beta;
  const int refrac = lif.refrac_steps();

  GradTape tape;
  tape.steps = steps;
  tape.u.resize(n_conn);
  tape.s.resize(n_conn);
  tape.gate.resize(n_conn);
  std::vector<std::vector<double>> v(n_conn);
  std::vector<std::vector<int>> refrac_left(n_conn);
  for (std::size_t c = 0; c < n_conn; ++c) {
    const std::size_t n = sizes[c + 1];
    tape.u[c].assign(T * n, 0.0);
    tape.s[c].assign(T * n, 0.0);
    tape.gate[c].assign(T * n, 0);
    v[c].assign(n, lif.v_rest);
    refrac_left[c].assign(n, 0);
  }
  std::vector<double> drive;
  std::vector<double> input_row(sizes[0]);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < n_conn; ++c) {
      const std::size_t n = sizes[c + 1];
      drive.resize(n);
      if (net.has_bias(c))
        std::copy(net.biases[c].begin(), net.biases[c].end(), drive.begin());
      else
        std::fill(drive.begin(), drive.end(), 0.0);
      const auto delay = static_cast<std::size_t>(net.topology.delay(c));
      if (t >= delay) {
        const Matrix& wt = ctx.wt[c];
        const std::size_t src_t = t - delay;
        if (c == 0) {
          if (src_t < input.n_steps()) {
            auto row = input.step(src_t);
            for (std::size_t j = 0; j < row.size(); ++j) {
              if (!row[j]) continue;
              const double* col = wt.data.data() + j * wt.cols;
              for (std::size_t i = 0; i < n; ++i) drive[i] += col[i];
            }
          }
        } else {
          const double* x = tape.s[c - 1].data() + src_t * sizes[c];
          for (std::size_t j = 0; j < sizes[c]; ++j) {
            const double xj = x[j];
            if (xj == 0.0) continue;
            const double* col = wt.data.data() + j * wt.cols;
            if (xj == 1.0) {
              for (std::size_t i = 0; i < n; ++i) drive[i] += col[i];
            } else {
              for (std::size_t i = 0; i < n; ++i) drive[i] += xj * col[i];
            }
          }
        }
      }
      double* u = tape.u[c].data() + t * n;
      double* s = tape.s[c].data() + t * n;
      std::uint8_t* g = tape.gate[c].data() + t * n;
      for (std::size_t i = 0; i < n; ++i) {
        if (mode == ForwardMode::spiking && refrac_left[c][i] > 0) {
          --refrac_left[c][i];
          u[i] = lif.v_reset;
          s[i] = 0.0;
          g[i] = 0;
          continue;
        }
        const double vi = lif.v_rest + beta * (v[c][i] - lif.v_rest) + gain * drive[i];
        u[i] = vi;
        g[i] = 1;
        if (mode == ForwardMode::spiking) {
          if (vi >= lif.v_th) {
            s[i] = 1.0;
            v[c][i] = lif.v_reset;
            refrac_left[c][i] = refrac;
          } else {
            s[i] = 0.0;
            v[c][i] = vi;
          }
        } else {
          s[i] = surrogate_activation(vi - lif.v_th, ctx.cfg.kind, ctx.cfg.slope);
          v[c][i] = vi;
        }
      }
    }
  }

  const std::size_t n_out = sizes.back();
  tape.logits.assign(n_out, 0.0);
  const auto& top_u = ctx.cfg.loss == LossKind::count_cross_entropy ? tape.s.back() : tape.u.back();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n_out; ++i) tape.logits[i] += top_u[t * n_out + i];
  if (ctx.cfg.loss == LossKind::membrane_cross_entropy)
    for (double& z : tape.logits) z /= static_cast<double>(T);
  tape.loss = log_sum_exp(tape.logits) - tape.logits[static_cast<std::size_t>(label)];
  tape.predicted = static_cast<std::size_t>(
      std::max_element(tape.logits.begin(), tape.logits.end()) - tape.logits.begin());
  return tape;
}

void run_backward(const Context& ctx, const SpikeRaster& input, const GradTape& tape, int label,
                  ForwardMode mode, NetGradients& grads, std::vector<Matrix>& first_layer_t) {
  const Network& net = ctx.net;
  const auto& sizes = net.topology.layer_sizes;
  const std::size_t n_conn = net.weights.size();
  const auto T = static_cast<std::size_t>(tape.steps);
  const LifParams& lif = net.lif;
  const double beta = lif.beta();
  const double gain = 1.0 - beta;
  const double th = lif.v_th;

  // dL/dlogits.
  const std::size_t n_out = sizes.back();
  std::vector<double> dz(n_out);
  const double lse = log_sum_exp(tape.logits);
  for (std::size_t i = 0; i < n_out; ++i) dz[i] = std::exp(tape.logits[i] - lse);
  dz[static_cast<std::size_t>(label)] -= 1.0;

  // gs: dL/ds for the layer currently being processed, T x N.
  std::vector<double> gs(T * n_out, 0.0);
  std::vector<double> gu_direct;
  if (ctx.cfg.loss == LossKind::count_cross_entropy) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < n_out; ++i) gs[t * n_out + i] = dz[i];
  } else {
    gu_direct.assign(n_out, 0.0);
    for (std::size_t i = 0; i < n_out; ++i) gu_direct[i] = dz[i] / static_cast<double>(T);
  }

  std::vector<double> da;
  for (std::size_t c = n_conn; c-- > 0;) {
    const std::size_t n = sizes[c + 1];
    const std::size_t n_in = sizes[c];
    da.assign(T * n, 0.0);
    std::vector<double> dv(n, 0.0);
    const bool top = c + 1 == n_conn;
    for (std::size_t t = T; t-- > 0;) {
      const double* u = tape.u[c].data() + t * n;
      const double* s = tape.s[c].data() + t * n;
      const std::uint8_t* g = tape.gate[c].data() + t * n;
      const double* gst = gs.data() + t * n;
      double* dat = da.data() + t * n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!g[i]) {
          dv[i] = 0.0;
          continue;
        }
        const double keep = mode == ForwardMode::spiking ? 1.0 - s[i] : 1.0;
        double du = gst[i] * surrogate_derivative(u[i] - th, ctx.cfg.kind, ctx.cfg.slope) + dv[i] * keep;
        if (top && !gu_direct.empty()) du += gu_direct[i];
        dat[i] = gain * du;
        dv[i] = beta * du;
      }
    }

    const auto delay = static_cast<std::size_t>(net.topology.delay(c));
    if (net.has_bias(c)) {
      auto& gb = grads.biases[c];
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < n; ++i) gb[i] += da[t * n + i];
    }
    if (c == 0) {
      Matrix& gt = first_layer_t[0];
      for (std::size_t t = delay; t < T; ++t) {
        const std::size_t src_t = t - delay;
        if (src_t >= input.n_steps()) break;
        auto row = input.step(src_t);
        const double* dat = da.data() + t * n;
        for (std::size_t j = 0; j < n_in; ++j) {
          if (!row[j]) continue;
          double* gcol = gt.data.data() + j * gt.cols;
          for (std::size_t i = 0; i < n; ++i) gcol[i] += dat[i];
        }
      }
      break;
    }

    const Matrix& w = net.weights[c];
    Matrix& gw = grads.weights[c];
    std::vector<double> gs_prev(T * n_in, 0.0);
    for (std::size_t t = delay; t < T; ++t) {
      const std::size_t src_t = t - delay;
      const double* x = tape.s[c - 1].data() + src_t * n_in;
      const double* dat = da.data() + t * n;
      double* gp = gs_prev.data() + src_t * n_in;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dat[i];
        if (d == 0.0) continue;
        const double* wrow = w.data.data() + i * n_in;
        double* grow = gw.data.data() + i * n_in;
        for (std::size_t j = 0; j < n_in; ++j) {
          gp[j] += d * wrow[j];
          if (x[j] != 0.0) grow[j] += d * x[j];
        }
      }
    }
    gs = std::move(gs_prev);
  }
}

void check_finite(const NetGradients& g) {
  if (!std::isfinite(g.loss)) throw DivergenceError("bptt_grad: non-finite loss");
  for (std::size_t c = 0; c < g.weights.size(); ++c)
    for (double x : g.weights[c].data)
      if (!std::isfinite(x))
        throw DivergenceError("bptt_grad: non-finite gradient in layer " + std::to_string(c));
}

}  // namespace

GradTape forward_tape(const Network& net, const SpikeRaster& input, int label,
                      const SurrogateConfig& cfg, ForwardMode mode) {
  net.validate();
  Context ctx(net, cfg);
  return run_forward(ctx, input, label, mode);
}

double surrogate_loss(const Network& net, const SpikeRaster& input, int label,
                      const SurrogateConfig& cfg, ForwardMode mode) {
  return forward_tape(net, input, label, cfg, mode).loss;
}

NetGradients bptt_grad(const Network& net, std::span<const SpikeRaster> inputs,
                       std::span<const int> labels, const SurrogateConfig& cfg, ForwardMode mode) {
  if (inputs.size() != labels.size()) throw DimensionError("bptt_grad: inputs/labels mismatch");
  const std::size_t n_out = net.topology.layer_sizes.back();
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= n_out)
      throw DimensionError("bptt_grad: label " + std::to_string(y) + " out of range");
  Context ctx(net, cfg);
  NetGradients grads = zero_gradients(net);
  std::vector<Matrix> first_t;
  first_t.emplace_back(net.weights[0].cols, net.weights[0].rows);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const GradTape tape = run_forward(ctx, inputs[b], labels[b], mode);
    grads.loss += tape.loss;
    if (tape.predicted == static_cast<std::size_t>(labels[b])) ++grads.correct;
    run_backward(ctx, inputs[b], tape, labels[b], mode, grads, first_t);
  }
  const Matrix& gt = first_t[0];
  Matrix& g0 = grads.weights[0];
  for (std::size_t i = 0; i < g0.rows; ++i)
    for (std::size_t j = 0; j < g0.cols; ++j) g0(i, j) += gt(j, i);
  grads.count = inputs.size();
  if (!inputs.empty()) {
    const double inv = 1.0 / static_cast<double>(inputs.size());
    for (auto& w : grads.weights)
      for (double& x : w.data) x *= inv;
    for (auto& bvec : grads.biases)
      for (double& x : bvec) x *= inv;
    grads.loss *= inv;
  }
  check_finite(grads);
  return grads;
}

Optimizer make_optimizer(const Network& net, const OptimizerConfig& cfg) {
  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < net.weights.size(); ++c) {
    sizes.push_back(net.weights[c].data.size());
    if (net.has_bias(c)) sizes.push_back(net.biases[c].size());
  }
  return Optimizer(cfg, sizes);
}

void apply_gradients(Network& net, const NetGradients& grads, Optimizer& opt, double lr) {
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> g;
  for (std::size_t c = 0; c < net.weights.size(); ++c) {
    params.emplace_back(net.weights[c].data);
    g.emplace_back(grads.weights[c].data);
    if (net.has_bias(c)) {
      params.emplace_back(net.biases[c]);
      g.emplace_back(grads.biases[c]);
    }
  }
  opt.step(params, g, lr);
}

double snn_evaluate(const Network& net, const Dataset& data, const EncoderConfig& enc) {
  return evaluate_network(net, data, enc).accuracy;
}

std::vector<EpochStats> train_surrogate(Network& net, const Dataset& train, const Dataset& test,
                                        const SurrogateConfig& cfg, const EpochCallback& on_epoch,
                                        Optimizer* optimizer) {
  cfg.validate();
  net.validate();
  if (train.n_features != net.topology.layer_sizes.front())
    throw DimensionError("train_surrogate: dataset feature count does not match the input layer");
  std::optional<Optimizer> own;
  if (!optimizer) {
    own.emplace(make_optimizer(net, cfg.opt));
    optimizer = &*own;
  }
  std::vector<EpochStats> curve;
  std::vector<std::size_t> order(train.size());
  std::vector<SpikeRaster> batch_in;
  std::vector<int> batch_y;
  double lr = cfg.opt.lr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const std::uint64_t stream = mix_seed(cfg.seed, 0x747261ULL, static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      batch_in.clear();
      batch_y.clear();
      for (std::size_t k = b; k < e; ++k) {
        batch_in.push_back(encode_sample(train, order[k], cfg.encoder, stream));
        batch_y.push_back(train.labels[order[k]]);
      }
      NetGradients g;
      try {
        g = bptt_grad(net, batch_in, batch_y, cfg);
      } catch (const DivergenceError& err) {
        throw DivergenceError(std::string(err.what()) + " (epoch " + std::to_string(epoch) +
                              ", batch starting at " + std::to_string(b) + ")");
      }
      if (g.loss > cfg.max_loss)
        throw DivergenceError("train_surrogate: loss " + std::to_string(g.loss) + " exceeds bound at epoch " +
                              std::to_string(epoch));
      loss_sum += g.loss * static_cast<double>(batch_in.size());
      correct += g.correct;
      apply_gradients(net, g, *optimizer, lr);
    }
    lr *= cfg.opt.lr_decay;
    EpochStats s;
    s.epoch = epoch;
    const double n = static_cast<double>(std::max<std::size_t>(1, train.size()));
    s.train_loss = loss_sum / n;
    s.train_acc = 100.0 * static_cast<double>(correct) / n;
    s.test_acc = test.size() ? snn_evaluate(net, test, cfg.encoder) : 0.0;
    s.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    curve.push_back(s);
    if (on_epoch) on_epoch(s);
  }
  return curve;
}

}  // namespace snnbench
