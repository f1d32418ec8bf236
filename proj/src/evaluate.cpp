#include "snnbench/evaluate.hpp"

#include <chrono>

#include "snnbench/error.hpp"

namespace snnbench {

std::string to_string(InputMode m) {
  return m == InputMode::spikes ? "rate_encoded" : "analog_current";
}

InputMode input_mode_from_string(const std::string& s) {
  if (s == "rate_encoded" || s == "spikes") return InputMode::spikes;
  if (s == "analog_current" || s == "analog") return InputMode::analog_current;
  throw ConfigError("unknown input mode '" + s + "'");
}

EncoderConfig encoder_for_window(const EncoderConfig& enc, int window) {
  EncoderConfig e = enc;
  if (window > e.steps()) e.window_ms = window * e.dt;
  return e;
}

InferenceStats evaluate_network(const Network& net, const Dataset& data, const EncoderConfig& enc_in,
                                InputMode mode, int window) {
  const auto start = std::chrono::steady_clock::now();
  const Simulator sim(net);
  if (window <= 0) window = enc_in.steps();
  const EncoderConfig enc = encoder_for_window(enc_in, window);
  if (mode == InputMode::analog_current && !data.is_static())
    throw ConfigError("evaluate_network: analog input needs a static dataset");
  SimOptions opts;
  opts.record_rasters = false;
  InferenceStats st;
  st.samples = data.size();
  double latency_sum = 0.0;
  double spikes = 0.0;
  double spikes_in = 0.0;
  double synops = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    SimTrace trace;
    if (mode == InputMode::analog_current) {
      AnalogInput in;
      const auto f = data.features(i);
      in.values.assign(f.begin(), f.end());
      trace = sim.run(in, window, opts);
    } else {
      trace = sim.run(encode_sample(data, i, enc, kEvalStream), window, opts);
    }
    const auto label = static_cast<std::size_t>(data.labels[i]);
    const CountDecision d = decode_count_argmax(trace.output_counts);
    if (d.cls == label) ++st.correct;
    if (d.silent) ++st.silent;
    if (auto fs = decode_first_spike(trace.output_first_spike)) {
      ++st.decided;
      latency_sum += fs->latency_steps;
      if (fs->cls == label) ++st.first_spike_correct;
    }
    const double s = static_cast<double>(total_spike_count(trace));
    spikes += s;
    spikes_in += s + static_cast<double>(trace.spikes_per_layer.front());
    synops += static_cast<double>(synaptic_op_count(trace));
  }
  if (st.samples) {
    const double n = static_cast<double>(st.samples);
    st.accuracy = 100.0 * static_cast<double>(st.correct) / n;
    st.spikes_mean = spikes / n;
    st.spikes_with_input_mean = spikes_in / n;
    st.synops_mean = synops / n;
  }
  if (st.decided) st.latency_steps_mean = latency_sum / static_cast<double>(st.decided);
  st.sim_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return st;
}

}  // namespace snnbench
