#include "snnbench/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "snnbench/error.hpp"

namespace snnbench {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw FormatError(what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError(what + ": unknown key '" + key + "'");
  }
}

const Json& need(const Json& j, const char* key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(what + ": missing key '" + key + "'");
  return *it;
}

template <class T>
T get_as(const Json& j, const char* key, const std::string& what) {
  try {
    return need(j, key, what).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": bad value for '" + key + "': " + e.what());
  }
}

void check_finite(std::span<const double> xs, const std::string& what) {
  for (double x : xs)
    if (!std::isfinite(x)) throw NumericError(what + ": non-finite value cannot be serialized");
}

Json matrices_to_json(const std::vector<Matrix>& ms, const std::string& what) {
  Json out = Json::array();
  for (const auto& m : ms) {
    check_finite(m.data, what);
    out.push_back(m.data);
  }
  return out;
}

std::vector<Matrix> matrices_from_json(const Json& j, const std::vector<std::size_t>& sizes,
                                       const std::string& what) {
  if (!j.is_array() || j.size() + 1 != sizes.size())
    throw FormatError(what + ": expected " + std::to_string(sizes.size() - 1) + " weight arrays");
  std::vector<Matrix> out;
  for (std::size_t c = 0; c < j.size(); ++c) {
    Matrix m{sizes[c + 1], sizes[c], {}};
    try {
      m.data = j[c].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(what + ": weights[" + std::to_string(c) + "]: " + e.what());
    }
    if (m.data.size() != m.rows * m.cols)
      throw FormatError(what + ": weights[" + std::to_string(c) + "] has " + std::to_string(m.data.size()) +
                        " values, expected " + std::to_string(m.rows * m.cols));
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::vector<double>> biases_from_json(const Json& j, const std::string& what) {
  try {
    return j.get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": biases: " + e.what());
  }
}

Json network_fields(const Network& net) {
  net.validate();
  Json j;
  j["layer_sizes"] = net.topology.layer_sizes;
  j["weights"] = matrices_to_json(net.weights, "network");
  j["lif"] = lif_to_json(net.lif);
  if (!net.topology.delays.empty()) j["delays"] = net.topology.delays;
  if (!net.biases.empty()) {
    for (const auto& b : net.biases) check_finite(b, "network");
    j["biases"] = net.biases;
  }
  return j;
}

Network network_fields_from(const Json& j, const std::string& what) {
  Network net;
  net.topology.layer_sizes = get_as<std::vector<std::size_t>>(j, "layer_sizes", what);
  if (net.topology.layer_sizes.size() < 2) throw FormatError(what + ": need at least two layers");
  if (j.contains("delays")) net.topology.delays = get_as<std::vector<int>>(j, "delays", what);
  net.lif = lif_from_json(need(j, "lif", what));
  net.weights = matrices_from_json(need(j, "weights", what), net.topology.layer_sizes, what);
  if (j.contains("biases")) net.biases = biases_from_json(j["biases"], what);
  try {
    net.validate();
  } catch (const Error& e) {
    throw FormatError(what + ": " + e.what());
  }
  return net;
}

}  // namespace

void require_known_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  check_keys(j, allowed, what);
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return std::string(buf, end);
}

Json lif_to_json(const LifParams& p) {
  return Json{{"tau_mem", p.tau_mem}, {"v_th", p.v_th},         {"v_reset", p.v_reset},
              {"v_rest", p.v_rest},   {"t_refrac", p.t_refrac}, {"dt", p.dt}};
}

LifParams lif_from_json(const Json& j) {
  const std::string what = "lif";
  check_keys(j, {"tau_mem", "v_th", "v_reset", "v_rest", "t_refrac", "dt"}, what);
  LifParams p;
  if (j.contains("tau_mem")) p.tau_mem = get_as<double>(j, "tau_mem", what);
  if (j.contains("v_th")) p.v_th = get_as<double>(j, "v_th", what);
  if (j.contains("v_reset")) p.v_reset = get_as<double>(j, "v_reset", what);
  if (j.contains("v_rest")) p.v_rest = get_as<double>(j, "v_rest", what);
  if (j.contains("t_refrac")) p.t_refrac = get_as<double>(j, "t_refrac", what);
  if (j.contains("dt")) p.dt = get_as<double>(j, "dt", what);
  p.validate();
  return p;
}

Json network_to_json(const Network& net) { return network_fields(net); }

Network network_from_json(const Json& j) {
  check_keys(j, {"layer_sizes", "weights", "lif", "delays", "biases"}, "network");
  return network_fields_from(j, "network");
}

bool json_has_labels(const Json& j) { return j.is_object() && j.contains("labels"); }

Json stdp_model_to_json(const StdpModel& m) {
  Json j = network_fields(m.net);
  j["labels"] = m.labels.labels;
  if (!m.labels.flagged.empty()) j["flagged"] = m.labels.flagged;
  j["wta"] = Json{{"inhibition_ms", m.wta.inhibition_ms},
                  {"normalize_total", m.wta.normalize_total},
                  {"normalize_l2", m.wta.normalize_l2}};
  return j;
}

StdpModel stdp_model_from_json(const Json& j) {
  const std::string what = "stdp model";
  check_keys(j, {"layer_sizes", "weights", "lif", "delays", "biases", "labels", "flagged", "wta"}, what);
  StdpModel m;
  m.net = network_fields_from(j, what);
  if (m.net.weights.size() != 1) throw FormatError(what + ": expected a single plastic layer");
  m.labels.labels = get_as<std::vector<int>>(j, "labels", what);
  if (m.labels.labels.size() != m.net.topology.layer_sizes[1])
    throw FormatError(what + ": one label per excitatory neuron required");
  for (int l : m.labels.labels)
    if (l < 0) throw FormatError(what + ": negative label");
  if (j.contains("flagged")) {
    m.labels.flagged = get_as<std::vector<std::uint8_t>>(j, "flagged", what);
    if (m.labels.flagged.size() != m.labels.labels.size())
      throw FormatError(what + ": one flag per excitatory neuron required");
  } else {
    m.labels.flagged.assign(m.labels.labels.size(), 0);
  }
  if (j.contains("wta")) {
    const Json& w = j["wta"];
    check_keys(w, {"inhibition_ms", "normalize_total", "normalize_l2"}, what + " wta");
    if (w.contains("inhibition_ms")) m.wta.inhibition_ms = get_as<double>(w, "inhibition_ms", what);
    if (w.contains("normalize_total")) m.wta.normalize_total = get_as<double>(w, "normalize_total", what);
    if (w.contains("normalize_l2")) m.wta.normalize_l2 = get_as<double>(w, "normalize_l2", what);
  }
  return m;
}

Json ann_to_json(const AnnModel& m) {
  m.validate();
  for (const auto& b : m.biases) check_finite(b, "ann");
  return Json{{"layer_sizes", m.layer_sizes}, {"weights", matrices_to_json(m.weights, "ann")}, {"biases", m.biases}};
}

AnnModel ann_from_json(const Json& j) {
  const std::string what = "ann checkpoint";
  check_keys(j, {"layer_sizes", "weights", "biases"}, what);
  AnnModel m;
  m.layer_sizes = get_as<std::vector<std::size_t>>(j, "layer_sizes", what);
  if (m.layer_sizes.size() < 2) throw FormatError(what + ": need at least two layers");
  m.weights = matrices_from_json(need(j, "weights", what), m.layer_sizes, what);
  m.biases = biases_from_json(need(j, "biases", what), what);
  try {
    m.validate();
  } catch (const Error& e) {
    throw FormatError(what + ": " + e.what());
  }
  return m;
}

Json optimizer_state_to_json(const Optimizer& opt) {
  const auto& c = opt.config();
  return Json{{"kind", to_string(c.kind)},
              {"lr", c.lr},
              {"momentum", c.momentum},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps},
              {"lr_decay", c.lr_decay},
              {"t", opt.t},
              {"m", opt.m},
              {"v", opt.v}};
}

void optimizer_state_from_json(const Json& j, Optimizer& opt) {
  const std::string what = "optimizer state";
  check_keys(j, {"kind", "lr", "momentum", "beta1", "beta2", "eps", "lr_decay", "t", "m", "v"}, what);
  if (optimizer_kind_from_string(get_as<std::string>(j, "kind", what)) != opt.config().kind)
    throw FormatError(what + ": optimizer kind does not match");
  auto m = get_as<std::vector<std::vector<double>>>(j, "m", what);
  auto v = get_as<std::vector<std::vector<double>>>(j, "v", what);
  auto same_shape = [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].size() != b[k].size()) return false;
    return true;
  };
  if (!same_shape(m, opt.m) || !same_shape(v, opt.v))
    throw FormatError(what + ": moment buffers do not match the parameter blocks");
  opt.m = std::move(m);
  opt.v = std::move(v);
  opt.t = get_as<long long>(j, "t", what);
}

Json inference_to_json(const InferenceStats& s) {
  return Json{{"samples", s.samples},
              {"accuracy", s.accuracy},
              {"silent", s.silent},
              {"decided", s.decided},
              {"first_spike_correct", s.first_spike_correct},
              {"latency_steps_mean", s.latency_steps_mean},
              {"spikes_mean", s.spikes_mean},
              {"spikes_with_input_mean", s.spikes_with_input_mean},
              {"synops_mean", s.synops_mean}};
}

Json conversion_report_to_json(const CalibrationStats& stats, const ConversionEval& eval) {
  Json fid = {{"window", Json::array()}, {"correlation", Json::array()}, {"mean_abs_error", Json::array()}};
  for (const auto& f : eval.fidelity) {
    fid["window"].push_back(f.window);
    fid["correlation"].push_back(f.correlation);
    fid["mean_abs_error"].push_back(f.mean_abs_error);
  }
  Json windows = Json::array();
  for (const auto& w : eval.windows) {
    Json e = inference_to_json(w.stats);
    e["window"] = w.window;
    windows.push_back(std::move(e));
  }
  return Json{{"lambda", stats.lambda},
              {"percentile", stats.percentile},
              {"calibration_samples", stats.samples},
              {"fidelity", fid},
              {"windows", windows}};
}

CalibrationStats calibration_from_report(const Json& j) {
  const std::string what = "conversion report";
  check_keys(j, {"lambda", "percentile", "calibration_samples", "fidelity", "windows"}, what);
  CalibrationStats s;
  s.lambda = get_as<std::vector<double>>(j, "lambda", what);
  s.percentile = get_as<double>(j, "percentile", what);
  if (j.contains("calibration_samples")) s.samples = get_as<std::size_t>(j, "calibration_samples", what);
  return s;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(1) + "\n"); }

const std::string& metrics_csv_header() {
  static const std::string h =
      "run_id,seed,model,dataset,epoch,train_loss,train_acc,test_acc,latency_ms_mean,"
      "spikes_per_inference_mean,synops_per_inference_mean,energy_mJ_mean,efficiency,wall_clock_s";
  return h;
}

std::string metrics_csv(const std::vector<RunRecord>& runs) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& r : runs) {
    for (const std::string* s : {&r.run_id, &r.model, &r.dataset})
      if (s->find_first_of(",\n\"") != std::string::npos)
        throw FormatError("metrics csv: field '" + *s + "' contains a separator");
    out += r.run_id + "," + std::to_string(r.seed) + "," + r.model + "," + r.dataset + "," +
           std::to_string(r.epoch);
    for (const auto& name : numeric_metric_names()) {
      if (name == "seed" || name == "epoch") continue;
      out += "," + format_double(metric_value(r, name));
    }
    out += "\n";
  }
  return out;
}

namespace {

double parse_double(const std::string& s, std::size_t line) {
  double x = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc{} || p != e)
    throw FormatError("metrics csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return x;
}

}  // namespace

std::vector<RunRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header())
    throw FormatError("metrics csv: header mismatch");
  std::vector<RunRecord> runs;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 14) throw FormatError("metrics csv line " + std::to_string(n) + ": expected 14 fields");
    RunRecord r;
    r.run_id = f[0];
    r.seed = static_cast<std::uint64_t>(parse_double(f[1], n));
    r.model = f[2];
    r.dataset = f[3];
    r.epoch = static_cast<int>(parse_double(f[4], n));
    r.train_loss = parse_double(f[5], n);
    r.train_acc = parse_double(f[6], n);
    r.test_acc = parse_double(f[7], n);
    r.latency_ms_mean = parse_double(f[8], n);
    r.spikes_per_inference_mean = parse_double(f[9], n);
    r.synops_per_inference_mean = parse_double(f[10], n);
    r.energy_mJ_mean = parse_double(f[11], n);
    r.efficiency = parse_double(f[12], n);
    r.wall_clock_s = parse_double(f[13], n);
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs) {
  write_text_file(path, metrics_csv(runs));
}

std::vector<RunRecord> read_metrics_csv(const std::filesystem::path& path) {
  return parse_metrics_csv(read_text_file(path));
}

Json aggregate_to_json(const MetricsReport& report) {
  Json metrics = Json::object();
  for (const auto& [name, s] : report.aggregates)
    metrics[name] = Json{{"mean", s.mean}, {"std", s.std}, {"n", s.n}, {"std_undefined", s.std_undefined}};
  return Json{{"runs", report.runs.size()}, {"metrics", metrics}};
}

}  // namespace snnbench
