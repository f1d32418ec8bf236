#include "snnbench/stdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "snnbench/error.hpp"
#include "snnbench/evaluate.hpp"

namespace snnbench {

void StdpParams::validate() const {
  if (!(a_plus >= 0.0) || !(a_minus >= 0.0)) throw ConfigError("StdpParams: amplitudes must be >= 0");
  if (!(tau_plus > 0.0) || !(tau_minus > 0.0)) throw ConfigError("StdpParams: taus must be > 0");
  if (!(w_min < w_max)) throw ConfigError("StdpParams: w_min must be < w_max");
  if (!(eta >= 0.0)) throw ConfigError("StdpParams: eta must be >= 0");
}

void StdpConfig::validate() const {
  stdp.validate();
  lif.validate();
  encoder.validate();
  if (n_neurons == 0) throw ConfigError("StdpConfig: need at least one neuron");
  if (!(wta.inhibition_ms >= 0.0)) throw ConfigError("StdpConfig: inhibition_ms must be >= 0");
  if (wta.normalize_total < 0.0 || wta.normalize_l2 < 0.0)
    throw ConfigError("StdpConfig: normalization targets must be >= 0");
  if (wta.normalize_total > 0.0 && wta.normalize_l2 > 0.0)
    throw ConfigError("StdpConfig: pick one of normalize_total and normalize_l2");
  if (epochs < 0) throw ConfigError("StdpConfig: epochs must be >= 0");
  if (!(eta_decay > 0.0)) throw ConfigError("StdpConfig: eta_decay must be > 0");
}

double stdp_pair_update(double dt_pair, const StdpParams& p) {
  if (dt_pair > 0.0) return p.eta * p.a_plus * std::exp(-dt_pair / p.tau_plus);
  if (dt_pair < 0.0) return -p.eta * p.a_minus * std::exp(dt_pair / p.tau_minus);
  return 0.0;
}

StdpModel stdp_init(std::size_t n_inputs, const StdpConfig& cfg) {
  cfg.validate();
  StdpModel model;
  Topology topo{{n_inputs, cfg.n_neurons}, {}};
  model.net = Network::zeros(topo, cfg.lif);
  model.wta = cfg.wta;
  Rng rng(mix_seed(cfg.seed, 0x73746470ULL));
  const double lo = cfg.stdp.w_min;
  const double hi = std::min(cfg.stdp.w_max, std::max(lo, cfg.init_max));
  for (double& w : model.net.weights[0].data) w = lo + (hi - lo) * uniform01(rng);
  model.labels.labels.assign(cfg.n_neurons, 0);
  model.labels.flagged.assign(cfg.n_neurons, 1);
  return model;
}

StdpModel stdp_init(const Dataset& train, const StdpConfig& cfg) {
  StdpModel model = stdp_init(train.n_features, cfg);
  if (!cfg.init_from_samples) return model;
  if (!train.is_static()) throw ConfigError("stdp_init: sample initialization needs a static dataset");
  if (train.size() == 0) throw ConfigError("stdp_init: empty training set");
  Rng rng(mix_seed(cfg.seed, 0x70726f74ULL));
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  Matrix& w = model.net.weights[0];
  for (std::size_t i = 0; i < w.rows; ++i) {
    const auto x = train.features(pick(rng));
    for (std::size_t j = 0; j < w.cols; ++j)
      w(i, j) = std::min(cfg.stdp.w_max, std::max(cfg.stdp.w_min, cfg.init_max * x[j]));
  }
  return model;
}

StdpTraces::StdpTraces(std::size_t n_pre, std::size_t n_post, const StdpParams& p, double dt)
    : p_(p),
      decay_pre_(std::exp(-dt / p.tau_plus)),
      decay_post_(std::exp(-dt / p.tau_minus)),
      pre_(n_pre, 0.0),
      post_(n_post, 0.0) {}

void StdpTraces::reset() {
  std::fill(pre_.begin(), pre_.end(), 0.0);
  std::fill(post_.begin(), post_.end(), 0.0);
  post_active_ = false;
}

void StdpTraces::decay() {
  for (double& x : pre_) x *= decay_pre_;
  if (post_active_)
    for (double& x : post_) x *= decay_post_;
}

double StdpTraces::apply(Matrix& wt, std::span<const std::uint8_t> pre_spikes,
                         std::span<const std::size_t> post_spikes) {
  const std::size_t n_pre = pre_.size();
  const std::size_t n_post = post_.size();
  double total = 0.0;
  const double pot = p_.eta * p_.a_plus;
  const double dep = p_.eta * p_.a_minus;
  for (std::size_t i : post_spikes) {
    for (std::size_t j = 0; j < n_pre; ++j) {
      if (pre_[j] == 0.0) continue;
      double& w = wt.data[j * n_post + i];
      const double old = w;
      w = std::min(p_.w_max, std::max(p_.w_min, w + pot * pre_[j]));
      total += std::abs(w - old);
    }
  }
  if (post_active_ && dep > 0.0) {
    for (std::size_t j = 0; j < n_pre; ++j) {
      if (!pre_spikes[j]) continue;
      double* row = wt.data.data() + j * n_post;
      for (std::size_t i = 0; i < n_post; ++i) {
        const double old = row[i];
        row[i] = std::min(p_.w_max, std::max(p_.w_min, old - dep * post_[i]));
        total += std::abs(row[i] - old);
      }
    }
  }
  for (std::size_t j = 0; j < n_pre; ++j)
    if (pre_spikes[j]) pre_[j] += 1.0;
  for (std::size_t i : post_spikes) post_[i] += 1.0;
  if (!post_spikes.empty()) post_active_ = true;
  return total;
}

Matrix stdp_apply_rasters(const Matrix& weights, const SpikeRaster& pre, const SpikeRaster& post,
                          const StdpParams& p, double dt) {
  p.validate();
  if (pre.n_steps() != post.n_steps()) throw DimensionError("stdp_apply_rasters: step counts differ");
  if (weights.rows != post.n_units() || weights.cols != pre.n_units())
    throw DimensionError("stdp_apply_rasters: weight shape does not match rasters");
  Matrix wt = weights.transposed();
  StdpTraces traces(pre.n_units(), post.n_units(), p, dt);
  std::vector<std::size_t> fired;
  for (std::size_t t = 0; t < pre.n_steps(); ++t) {
    traces.decay();
    fired.clear();
    auto row = post.step(t);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i]) fired.push_back(i);
    traces.apply(wt, pre.step(t), fired);
  }
  return wt.transposed();
}

namespace {

// Excitatory population with winner-take-all. Works on transposed weights
// (n_inputs x n_neurons) so both the drive and the depression touch
// contiguous rows.
class WtaLayer {
 public:
  WtaLayer(std::size_t n_inputs, std::size_t n_neurons, const WtaConfig& wta, const LifParams& lif)
      : n_in_(n_inputs),
        n_(n_neurons),
        lif_(lif),
        beta_(lif.beta()),
        refrac_steps_(lif.refrac_steps()),
        inhib_steps_(static_cast<int>(std::ceil(wta.inhibition_ms / lif.dt - 1e-9))),
        v_(n_neurons),
        refrac_(n_neurons),
        inhib_(n_neurons),
        drive_(n_neurons) {}

  // Runs one presentation. With traces, weights are plastic. Returns summed |dw|.
  double run(Matrix& wt, const SpikeRaster& input, StdpTraces* traces,
             std::vector<std::uint64_t>& counts, int* first_spike = nullptr) {
    std::fill(v_.begin(), v_.end(), lif_.v_rest);
    std::fill(refrac_.begin(), refrac_.end(), 0);
    std::fill(inhib_.begin(), inhib_.end(), 0);
    if (traces) traces->reset();
    counts.assign(n_, 0);
    if (first_spike) *first_spike = -1;
    double total = 0.0;
    const double gain = 1.0 - beta_;
    std::vector<std::size_t> fired;
    for (std::size_t t = 0; t < input.n_steps(); ++t) {
      if (traces) traces->decay();
      std::fill(drive_.begin(), drive_.end(), 0.0);
      if (t >= 1) {
        auto pre = input.step(t - 1);
        for (std::size_t j = 0; j < n_in_; ++j) {
          if (!pre[j]) continue;
          const double* col = wt.data.data() + j * n_;
          for (std::size_t i = 0; i < n_; ++i) drive_[i] += col[i];
        }
      }
      std::size_t winner = n_;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n_; ++i) {
        if (refrac_[i] > 0) {
          --refrac_[i];
          continue;
        }
        if (inhib_[i] > 0) {
          --inhib_[i];
          continue;
        }
        const double v = lif_.v_rest + beta_ * (v_[i] - lif_.v_rest) + gain * drive_[i];
        v_[i] = v;
        if (v >= lif_.v_th && v > best) {
          best = v;
          winner = i;
        }
      }
      fired.clear();
      if (winner < n_) {
        fired.push_back(winner);
        ++counts[winner];
        if (first_spike && *first_spike < 0) *first_spike = static_cast<int>(t);
        for (std::size_t i = 0; i < n_; ++i) {
          v_[i] = lif_.v_reset;
          if (i == winner) {
            refrac_[i] = refrac_steps_;
          } else {
            inhib_[i] = std::max(inhib_[i], inhib_steps_);
          }
        }
      }
      if (traces) total += traces->apply(wt, input.step(t), fired);
    }
    return total;
  }

 private:
  std::size_t n_in_;
  std::size_t n_;
  LifParams lif_;
  double beta_;
  int refrac_steps_;
  int inhib_steps_;
  std::vector<double> v_;
  std::vector<int> refrac_;
  std::vector<int> inhib_;
  std::vector<double> drive_;
};

void normalize_rows(Matrix& wt, const WtaConfig& wta, const StdpParams& p) {
  const bool l2 = wta.normalize_l2 > 0.0;
  const double target = l2 ? wta.normalize_l2 : wta.normalize_total;
  if (!(target > 0.0)) return;
  const std::size_t n_in = wt.rows;
  const std::size_t n = wt.cols;
  std::vector<double> sums(n, 0.0);
  for (std::size_t j = 0; j < n_in; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double w = wt.data[j * n + i];
      sums[i] += l2 ? w * w : w;
    }
  for (std::size_t i = 0; i < n; ++i) {
    if (sums[i] <= 0.0) continue;
    const double f = target / (l2 ? std::sqrt(sums[i]) : sums[i]);
    for (std::size_t j = 0; j < n_in; ++j) {
      double& w = wt.data[j * n + i];
      w = std::min(p.w_max, std::max(p.w_min, w * f));
    }
  }
}

}  // namespace

double stdp_present(Matrix& weights, const SpikeRaster& input, const StdpParams& p,
                    const WtaConfig& wta, const LifParams& lif, std::vector<std::uint64_t>* post_counts) {
  p.validate();
  lif.validate();
  if (weights.cols != input.n_units()) throw DimensionError("stdp_present: input size mismatch");
  Matrix wt = weights.transposed();
  StdpTraces traces(weights.cols, weights.rows, p, lif.dt);
  WtaLayer layer(weights.cols, weights.rows, wta, lif);
  std::vector<std::uint64_t> counts;
  const double total = layer.run(wt, input, &traces, counts);
  weights = wt.transposed();
  if (post_counts) *post_counts = std::move(counts);
  return total;
}

std::vector<std::uint64_t> stdp_response(const StdpModel& model, const SpikeRaster& input) {
  const Matrix& w = model.net.weights[0];
  if (w.cols != input.n_units()) throw DimensionError("stdp_response: input size mismatch");
  Matrix wt = w.transposed();
  WtaLayer layer(w.cols, w.rows, model.wta, model.net.lif);
  std::vector<std::uint64_t> counts;
  layer.run(wt, input, nullptr, counts);
  return counts;
}

StdpEpochStats stdp_train_epoch(StdpModel& model, const Dataset& data, const StdpConfig& cfg, int epoch) {
  cfg.validate();
  Matrix& w = model.net.weights[0];
  if (data.n_features != w.cols) throw DimensionError("stdp_train_epoch: dataset does not match input layer");
  StdpParams p = cfg.stdp;
  p.eta = cfg.stdp.eta * std::pow(cfg.eta_decay, static_cast<double>(epoch - 1));
  Matrix wt = w.transposed();
  StdpTraces traces(w.cols, w.rows, p, cfg.lif.dt);
  WtaLayer layer(w.cols, w.rows, model.wta, model.net.lif);
  const std::uint64_t stream = mix_seed(cfg.seed, 0x737464ULL, static_cast<std::uint64_t>(epoch));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(cfg.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);

  StdpEpochStats st;
  st.epoch = epoch;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint8_t> active(w.rows, 0);
  const double n_weights = static_cast<double>(w.data.size());
  double dw_sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    normalize_rows(wt, model.wta, p);
    const SpikeRaster input = encode_sample(data, order[k], cfg.encoder, stream);
    const double dw = layer.run(wt, input, &traces, counts);
    if (!std::isfinite(dw) || dw / n_weights > cfg.max_mean_dw)
      throw DivergenceError("stdp_train_epoch: mean |dw| " + std::to_string(dw / n_weights) +
                            " exceeds bound at sample " + std::to_string(k) + " of epoch " +
                            std::to_string(epoch));
    dw_sum += dw;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      st.post_spikes += counts[i];
      if (counts[i]) active[i] = 1;
    }
  }
  normalize_rows(wt, model.wta, p);
  w = wt.transposed();
  st.mean_abs_dw = data.size() ? dw_sum / (n_weights * static_cast<double>(data.size())) : 0.0;
  st.active_neurons = static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
  return st;
}

NeuronLabels assign_labels(const std::vector<std::vector<std::uint64_t>>& counts) {
  NeuronLabels out;
  for (const auto& row : counts) {
    std::size_t best = 0;
    std::uint64_t best_count = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] > best_count) {
        best_count = row[k];
        best = k;
      }
    }
    out.labels.push_back(static_cast<int>(best));
    out.flagged.push_back(best_count == 0 ? 1 : 0);
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> stdp_class_responses(const StdpModel& model, const Dataset& data,
                                                           const EncoderConfig& enc, std::uint64_t stream) {
  const Matrix& w = model.net.weights[0];
  Matrix wt = w.transposed();
  WtaLayer layer(w.cols, w.rows, model.wta, model.net.lif);
  std::vector<std::vector<std::uint64_t>> table(w.rows, std::vector<std::uint64_t>(data.n_classes, 0));
  std::vector<std::uint64_t> counts;
  for (std::size_t s = 0; s < data.size(); ++s) {
    layer.run(wt, encode_sample(data, s, enc, stream), nullptr, counts);
    const auto y = static_cast<std::size_t>(data.labels[s]);
    for (std::size_t i = 0; i < counts.size(); ++i) table[i][y] += counts[i];
  }
  return table;
}

StdpDecision stdp_classify(const StdpModel& model, std::span<const std::uint64_t> response,
                           std::size_t n_classes) {
  if (response.size() != model.labels.labels.size())
    throw DimensionError("stdp_classify: response size does not match labels");
  std::vector<std::uint64_t> votes(n_classes, 0);
  for (std::size_t i = 0; i < response.size(); ++i) {
    const auto label = static_cast<std::size_t>(model.labels.labels[i]);
    if (label >= n_classes) throw DimensionError("stdp_classify: label out of range");
    votes[label] += response[i];
  }
  StdpDecision d;
  std::uint64_t best = 0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (votes[k] > best) {
      best = votes[k];
      d.cls = k;
    }
  }
  d.silent = best == 0;
  return d;
}

StdpDecision stdp_classify(const StdpModel& model, const SpikeRaster& input, std::size_t n_classes) {
  const auto response = stdp_response(model, input);
  return stdp_classify(model, response, n_classes);
}

InferenceStats stdp_inference(const StdpModel& model, const Dataset& data, const EncoderConfig& enc) {
  const auto start = std::chrono::steady_clock::now();
  const Matrix& w = model.net.weights[0];
  Matrix wt = w.transposed();
  WtaLayer layer(w.cols, w.rows, model.wta, model.net.lif);
  InferenceStats st;
  st.samples = data.size();
  std::vector<std::uint64_t> counts;
  double latency = 0.0, spikes = 0.0, spikes_in = 0.0, synops = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const SpikeRaster input = encode_sample(data, s, enc, kEvalStream);
    int first = -1;
    layer.run(wt, input, nullptr, counts, &first);
    const StdpDecision d = stdp_classify(model, counts, data.n_classes);
    const auto y = static_cast<std::size_t>(data.labels[s]);
    if (d.cls == y) ++st.correct;
    if (d.silent) ++st.silent;
    if (first >= 0) {
      ++st.decided;
      latency += first;
    }
    std::uint64_t out = 0;
    for (auto c : counts) out += c;
    const std::uint64_t in = input.total();
    spikes += static_cast<double>(out);
    spikes_in += static_cast<double>(out + in);
    synops += static_cast<double>(in * w.rows);
  }
  if (st.samples) {
    const double n = static_cast<double>(st.samples);
    st.accuracy = 100.0 * static_cast<double>(st.correct) / n;
    st.spikes_mean = spikes / n;
    st.spikes_with_input_mean = spikes_in / n;
    st.synops_mean = synops / n;
  }
  if (st.decided) st.latency_steps_mean = latency / static_cast<double>(st.decided);
  st.sim_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return st;
}

double stdp_evaluate(const StdpModel& model, const Dataset& data, const EncoderConfig& enc) {
  return stdp_inference(model, data, enc).accuracy;
}

std::vector<StdpPass> train_stdp(StdpModel& model, const Dataset& train, const Dataset& calib,
                                 const Dataset& test, const StdpConfig& cfg,
                                 const std::function<void(const StdpPass&)>& on_pass) {
  std::vector<StdpPass> passes;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    StdpPass pass;
    pass.pass = epoch;
    pass.train = stdp_train_epoch(model, train, cfg, epoch);
    const std::uint64_t calib_stream = mix_seed(cfg.seed, 0x63616cULL);
    model.labels = assign_labels(stdp_class_responses(model, calib, cfg.encoder, calib_stream));
    std::size_t correct = 0;
    {
      const Matrix& w = model.net.weights[0];
      Matrix wt = w.transposed();
      WtaLayer layer(w.cols, w.rows, model.wta, model.net.lif);
      std::vector<std::uint64_t> counts;
      for (std::size_t s = 0; s < calib.size(); ++s) {
        layer.run(wt, encode_sample(calib, s, cfg.encoder, calib_stream), nullptr, counts);
        if (stdp_classify(model, counts, calib.n_classes).cls == static_cast<std::size_t>(calib.labels[s]))
          ++correct;
      }
    }
    pass.calib_acc = calib.size() ? 100.0 * static_cast<double>(correct) / static_cast<double>(calib.size()) : 0.0;
    pass.test_acc = test.size() ? stdp_evaluate(model, test, cfg.encoder) : 0.0;
    pass.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    passes.push_back(pass);
    if (on_pass) on_pass(pass);
  }
  return passes;
}

}  // namespace snnbench
