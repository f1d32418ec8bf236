#include "snnbench/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "snnbench/error.hpp"

namespace snnbench {

namespace fs = std::filesystem;

std::string to_string(Family f) {
  switch (f) {
    case Family::ann: return "ann";
    case Family::converted_snn: return "converted_snn";
    case Family::surrogate_snn: return "surrogate_snn";
    case Family::stdp_snn: return "stdp_snn";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::ann, Family::converted_snn, Family::surrogate_snn, Family::stdp_snn})
    if (s == to_string(f)) return f;
  throw ConfigError("unknown model family '" + s + "'");
}

std::string plot_name(Family f) {
  switch (f) {
    case Family::ann: return "ann";
    case Family::converted_snn: return "converted";
    case Family::surrogate_snn: return "surrogate";
    case Family::stdp_snn: return "stdp";
  }
  return "?";
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr Family kFamilies[] = {Family::ann, Family::converted_snn, Family::surrogate_snn, Family::stdp_snn};

// Config reading: every section rejects unknown keys and keeps defaults for
// absent ones.
struct Reader {
  const Json& j;
  std::string what;

  Reader(const Json& json, std::string name, std::initializer_list<const char*> keys)
      : j(json), what(std::move(name)) {
    try {
      require_known_keys(j, keys, what);
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  }

  template <class T>
  void get(const char* key, T& out) const {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(what + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j.contains(key); }
  const Json& at(const char* key) const { return j.at(key); }
};

OptimizerConfig read_optimizer(const Json& j, const std::string& what, OptimizerConfig o) {
  Reader r(j, what, {"kind", "lr", "momentum", "beta1", "beta2", "eps", "lr_decay"});
  std::string kind = to_string(o.kind);
  r.get("kind", kind);
  o.kind = optimizer_kind_from_string(kind);
  r.get("lr", o.lr);
  r.get("momentum", o.momentum);
  r.get("beta1", o.beta1);
  r.get("beta2", o.beta2);
  r.get("eps", o.eps);
  r.get("lr_decay", o.lr_decay);
  return o;
}

Json optimizer_json(const OptimizerConfig& o) {
  return Json{{"kind", to_string(o.kind)}, {"lr", o.lr},     {"momentum", o.momentum}, {"beta1", o.beta1},
              {"beta2", o.beta2},          {"eps", o.eps}, {"lr_decay", o.lr_decay}};
}

std::string dataset_kind_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::mnist_idx: return "mnist_idx";
    case DatasetKind::event_csv: return "event_csv";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "?";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "mnist_idx") return DatasetKind::mnist_idx;
  if (s == "event_csv") return DatasetKind::event_csv;
  if (s == "synthetic") return DatasetKind::synthetic;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty() || name.find_first_of(",\n\"/") != std::string::npos)
    throw ConfigError("config: name must be nonempty without , / or quotes");
  if (families.empty()) throw ConfigError("config: no model families");
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("config: seeds must be distinct");
  if (std::set<Family>(families.begin(), families.end()).size() != families.size())
    throw ConfigError("config: duplicate model family");
  encoder.validate();
  lif.validate();
  energy.validate();
  if (window < 0) throw ConfigError("config: window must be >= 0");
  if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
  if (encoder.dt != lif.dt) throw ConfigError("config: encoder dt and lif dt differ");
  ann.opt.validate();
  if (ann.epochs < 0 || ann.batch_size == 0) throw ConfigError("config: bad ann trainer settings");
  conversion.fine_tune_opt.validate();
  if (conversion.fine_tune_epochs < 0) throw ConfigError("config: fine_tune_epochs must be >= 0");
  if (conversion.fine_tune_epochs > 0 && conversion.input_mode != InputMode::spikes)
    throw ConfigError("config: converted fine-tuning needs input_mode rate_encoded");
  for (int w : conversion.windows)
    if (w < 1) throw ConfigError("config: conversion windows must be >= 1");
  if (conversion.calibration_samples == 0) throw ConfigError("config: calibration_samples must be > 0");
  surrogate.trainer.validate();
  stdp.trainer.validate();
  if (stdp.calibration_samples == 0) throw ConfigError("config: stdp calibration_samples must be > 0");
  for (Family f : families) {
    const bool needs_rate = f == Family::stdp_snn || f == Family::surrogate_snn ||
                            (f == Family::converted_snn && conversion.input_mode == InputMode::spikes);
    if (needs_rate && dataset.kind == DatasetKind::mnist_idx && encoder.scheme == EncoderScheme::event)
      throw ConfigError("config: event encoder cannot encode static images");
    if ((f == Family::ann || f == Family::converted_snn) && dataset.kind != DatasetKind::mnist_idx)
      throw ConfigError("config: " + to_string(f) + " needs a static (mnist_idx) dataset");
  }
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  Reader r(j, "config",
           {"name", "families", "dataset", "encoder", "lif", "window", "seeds", "out_dir", "energy", "eval_every",
            "record_wall_clock", "ann", "conversion", "surrogate", "stdp"});
  r.get("name", c.name);
  if (r.has("families")) {
    std::vector<std::string> names;
    r.get("families", names);
    c.families.clear();
    for (const auto& n : names) c.families.push_back(family_from_string(n));
  }
  r.get("window", c.window);
  r.get("seeds", c.seeds);
  r.get("out_dir", c.out_dir);
  r.get("eval_every", c.eval_every);
  r.get("record_wall_clock", c.record_wall_clock);

  if (r.has("dataset")) {
    Reader d(r.at("dataset"), "dataset",
             {"kind", "path", "train_limit", "test_limit", "normalization", "input_size", "classes", "train_samples",
              "test_samples", "events_per_sample", "window_ms", "jitter_us", "disjoint_units", "seed"});
    std::string kind = dataset_kind_string(c.dataset.kind);
    d.get("kind", kind);
    c.dataset.kind = dataset_kind_from_string(kind);
    d.get("path", c.dataset.path);
    d.get("train_limit", c.dataset.train_limit);
    d.get("test_limit", c.dataset.test_limit);
    std::string norm = "divide_255";
    d.get("normalization", norm);
    if (norm != "divide_255") throw ConfigError("dataset.normalization: only divide_255 is supported");
    d.get("input_size", c.dataset.input_size);
    d.get("classes", c.dataset.classes);
    d.get("train_samples", c.dataset.train_samples);
    d.get("test_samples", c.dataset.test_samples);
    d.get("events_per_sample", c.dataset.synthetic.events_per_sample);
    d.get("window_ms", c.dataset.synthetic.window_ms);
    d.get("jitter_us", c.dataset.synthetic.jitter_us);
    d.get("disjoint_units", c.dataset.synthetic.disjoint_units);
    d.get("seed", c.dataset.synthetic_seed);
    if (c.dataset.kind == DatasetKind::synthetic) {
      if (c.dataset.input_size) c.dataset.synthetic.input_size = c.dataset.input_size;
      if (!c.dataset.classes) c.dataset.classes = 4;
    }
  }
  if (r.has("encoder")) {
    Reader e(r.at("encoder"), "encoder", {"scheme", "window_ms", "dt", "r_max", "t_max_ms", "split_polarity"});
    std::string scheme = to_string(c.encoder.scheme);
    e.get("scheme", scheme);
    c.encoder.scheme = encoder_scheme_from_string(scheme);
    e.get("window_ms", c.encoder.window_ms);
    e.get("dt", c.encoder.dt);
    e.get("r_max", c.encoder.r_max);
    e.get("t_max_ms", c.encoder.t_max_ms);
    e.get("split_polarity", c.encoder.split_polarity);
  }
  if (r.has("lif")) {
    try {
      c.lif = lif_from_json(r.at("lif"));
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  }
  if (r.has("energy")) {
    Reader e(r.at("energy"), "energy", {"e_spike", "e_synapse", "ann_const"});
    e.get("e_spike", c.energy.e_spike);
    e.get("e_synapse", c.energy.e_synapse);
    e.get("ann_const", c.energy.ann_const);
  }
  if (r.has("ann")) {
    Reader a(r.at("ann"), "ann", {"hidden", "optimizer", "epochs", "batch_size", "train_limit"});
    a.get("hidden", c.ann.hidden);
    if (a.has("optimizer")) c.ann.opt = read_optimizer(a.at("optimizer"), "ann.optimizer", c.ann.opt);
    a.get("epochs", c.ann.epochs);
    a.get("batch_size", c.ann.batch_size);
    a.get("train_limit", c.ann.train_limit);
  }
  if (r.has("conversion")) {
    Reader v(r.at("conversion"), "conversion",
             {"percentile", "calibration_samples", "input_mode", "windows", "probe_samples", "fine_tune_epochs",
              "fine_tune_optimizer"});
    v.get("percentile", c.conversion.percentile);
    v.get("calibration_samples", c.conversion.calibration_samples);
    std::string mode = to_string(c.conversion.input_mode);
    v.get("input_mode", mode);
    c.conversion.input_mode = input_mode_from_string(mode);
    v.get("windows", c.conversion.windows);
    v.get("probe_samples", c.conversion.probe_samples);
    v.get("fine_tune_epochs", c.conversion.fine_tune_epochs);
    if (v.has("fine_tune_optimizer"))
      c.conversion.fine_tune_opt =
          read_optimizer(v.at("fine_tune_optimizer"), "conversion.fine_tune_optimizer", c.conversion.fine_tune_opt);
  }
  if (r.has("surrogate")) {
    Reader s(r.at("surrogate"), "surrogate",
             {"hidden", "kind", "slope", "loss", "optimizer", "epochs", "batch_size", "init_gain", "max_loss",
              "train_limit"});
    auto& t = c.surrogate.trainer;
    s.get("hidden", c.surrogate.hidden);
    std::string kind = to_string(t.kind);
    s.get("kind", kind);
    t.kind = surrogate_kind_from_string(kind);
    s.get("slope", t.slope);
    std::string loss = to_string(t.loss);
    s.get("loss", loss);
    t.loss = loss_kind_from_string(loss);
    if (s.has("optimizer")) t.opt = read_optimizer(s.at("optimizer"), "surrogate.optimizer", t.opt);
    s.get("epochs", t.epochs);
    s.get("batch_size", t.batch_size);
    s.get("init_gain", t.init_gain);
    s.get("max_loss", t.max_loss);
    s.get("train_limit", c.surrogate.train_limit);
  }
  if (r.has("stdp")) {
    Reader s(r.at("stdp"), "stdp",
             {"neurons", "a_plus", "a_minus", "tau_plus", "tau_minus", "w_min", "w_max", "eta", "eta_decay", "epochs",
              "init_max", "init_from_samples", "inhibition_ms", "normalize_total", "normalize_l2", "max_mean_dw",
              "train_limit", "calibration_samples"});
    auto& t = c.stdp.trainer;
    s.get("neurons", t.n_neurons);
    s.get("a_plus", t.stdp.a_plus);
    s.get("a_minus", t.stdp.a_minus);
    s.get("tau_plus", t.stdp.tau_plus);
    s.get("tau_minus", t.stdp.tau_minus);
    s.get("w_min", t.stdp.w_min);
    s.get("w_max", t.stdp.w_max);
    s.get("eta", t.stdp.eta);
    s.get("eta_decay", t.eta_decay);
    s.get("epochs", t.epochs);
    s.get("init_max", t.init_max);
    s.get("init_from_samples", t.init_from_samples);
    s.get("inhibition_ms", t.wta.inhibition_ms);
    s.get("normalize_total", t.wta.normalize_total);
    s.get("normalize_l2", t.wta.normalize_l2);
    s.get("max_mean_dw", t.max_mean_dw);
    s.get("train_limit", c.stdp.train_limit);
    s.get("calibration_samples", c.stdp.calibration_samples);
  }
  // Shared settings flow into the trainers.
  c.surrogate.trainer.encoder = c.encoder;
  c.stdp.trainer.encoder = c.encoder;
  c.stdp.trainer.lif = c.lif;
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json fams = Json::array();
  for (Family f : c.families) fams.push_back(to_string(f));
  Json ds = {{"kind", dataset_kind_string(c.dataset.kind)},
             {"path", c.dataset.path},
             {"train_limit", c.dataset.train_limit},
             {"test_limit", c.dataset.test_limit}};
  if (c.dataset.kind == DatasetKind::mnist_idx) ds["normalization"] = "divide_255";
  if (c.dataset.kind != DatasetKind::mnist_idx) {
    ds["input_size"] = c.dataset.kind == DatasetKind::synthetic ? c.dataset.synthetic.input_size : c.dataset.input_size;
    ds["classes"] = c.dataset.classes;
  }
  if (c.dataset.kind == DatasetKind::synthetic) {
    ds["train_samples"] = c.dataset.train_samples;
    ds["test_samples"] = c.dataset.test_samples;
    ds["events_per_sample"] = c.dataset.synthetic.events_per_sample;
    ds["window_ms"] = c.dataset.synthetic.window_ms;
    ds["jitter_us"] = c.dataset.synthetic.jitter_us;
    ds["disjoint_units"] = c.dataset.synthetic.disjoint_units;
    ds["seed"] = c.dataset.synthetic_seed;
  }
  const auto& s = c.surrogate.trainer;
  const auto& t = c.stdp.trainer;
  return Json{
      {"name", c.name},
      {"families", fams},
      {"dataset", ds},
      {"encoder",
       {{"scheme", to_string(c.encoder.scheme)},
        {"window_ms", c.encoder.window_ms},
        {"dt", c.encoder.dt},
        {"r_max", c.encoder.r_max},
        {"t_max_ms", c.encoder.t_max_ms},
        {"split_polarity", c.encoder.split_polarity}}},
      {"lif", lif_to_json(c.lif)},
      {"window", c.window},
      {"seeds", c.seeds},
      {"out_dir", c.out_dir},
      {"energy", {{"e_spike", c.energy.e_spike}, {"e_synapse", c.energy.e_synapse}, {"ann_const", c.energy.ann_const}}},
      {"eval_every", c.eval_every},
      {"record_wall_clock", c.record_wall_clock},
      {"ann",
       {{"hidden", c.ann.hidden},
        {"optimizer", optimizer_json(c.ann.opt)},
        {"epochs", c.ann.epochs},
        {"batch_size", c.ann.batch_size},
        {"train_limit", c.ann.train_limit}}},
      {"conversion",
       {{"percentile", c.conversion.percentile},
        {"calibration_samples", c.conversion.calibration_samples},
        {"input_mode", to_string(c.conversion.input_mode)},
        {"windows", c.conversion.windows},
        {"probe_samples", c.conversion.probe_samples},
        {"fine_tune_epochs", c.conversion.fine_tune_epochs},
        {"fine_tune_optimizer", optimizer_json(c.conversion.fine_tune_opt)}}},
      {"surrogate",
       {{"hidden", c.surrogate.hidden},
        {"kind", to_string(s.kind)},
        {"slope", s.slope},
        {"loss", to_string(s.loss)},
        {"optimizer", optimizer_json(s.opt)},
        {"epochs", s.epochs},
        {"batch_size", s.batch_size},
        {"init_gain", s.init_gain},
        {"max_loss", s.max_loss},
        {"train_limit", c.surrogate.train_limit}}},
      {"stdp",
       {{"neurons", t.n_neurons},
        {"a_plus", t.stdp.a_plus},
        {"a_minus", t.stdp.a_minus},
        {"tau_plus", t.stdp.tau_plus},
        {"tau_minus", t.stdp.tau_minus},
        {"w_min", t.stdp.w_min},
        {"w_max", t.stdp.w_max},
        {"eta", t.stdp.eta},
        {"eta_decay", t.eta_decay},
        {"epochs", t.epochs},
        {"init_max", t.init_max},
        {"init_from_samples", t.init_from_samples},
        {"inhibition_ms", t.wta.inhibition_ms},
        {"normalize_total", t.wta.normalize_total},
        {"normalize_l2", t.wta.normalize_l2},
        {"max_mean_dw", t.max_mean_dw},
        {"train_limit", c.stdp.train_limit},
        {"calibration_samples", c.stdp.calibration_samples}}}};
}

ExperimentConfig load_config(const fs::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j);
}

fs::path resolve_data_dir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("SNNBENCH_DATA_DIR"); env && *env) return env;
  return "data";
}

namespace {

Dataset limited(const Dataset& d, std::size_t n) { return n ? d.head(n) : d; }

Dataset load_event_manifest(const fs::path& manifest, const DatasetSpec& spec, const EncoderConfig& enc,
                            const std::string& name) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("event dataset: cannot open " + manifest.string());
  std::string line;
  if (!std::getline(in, line) || line != "file,label")
    throw FormatError(manifest.string() + ": expected header 'file,label'");
  EventSet set;
  int max_label = -1;
  std::uint32_t max_unit = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw FormatError(manifest.string() + ": bad row '" + line + "'");
    const fs::path file = manifest.parent_path() / line.substr(0, comma);
    int label = 0;
    try {
      label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw FormatError(manifest.string() + ": bad label in '" + line + "'");
    }
    if (label < 0) throw FormatError(manifest.string() + ": negative label");
    set.streams.push_back(read_event_csv_file(file.string()));
    for (const auto& e : set.streams.back().events) max_unit = std::max(max_unit, e.unit);
    set.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  set.input_size = spec.input_size ? spec.input_size : static_cast<std::size_t>(max_unit) + 1;
  set.n_classes = spec.classes ? spec.classes : static_cast<std::size_t>(max_label + 1);
  if (max_label >= static_cast<int>(set.n_classes)) throw FormatError(manifest.string() + ": label out of range");
  return events_to_dataset(set, enc, name);
}

}  // namespace

DatasetSplit load_dataset(const DatasetSpec& spec, const EncoderConfig& enc, const fs::path& data_dir) {
  const fs::path dir = fs::path(spec.path).is_absolute() ? fs::path(spec.path) : data_dir / spec.path;
  DatasetSplit split;
  switch (spec.kind) {
    case DatasetKind::mnist_idx:
      if (!fs::is_directory(dir)) throw ConfigError("MNIST directory not found: " + dir.string());
      split = load_mnist_dir(dir.string());
      break;
    case DatasetKind::event_csv: {
      if (!fs::is_directory(dir)) throw ConfigError("event dataset directory not found: " + dir.string());
      const std::string name = dir.filename().string();
      split.train = load_event_manifest(dir / "train.csv", spec, enc, name);
      split.test = load_event_manifest(dir / "test.csv", spec, enc, name);
      if (split.train.n_features != split.test.n_features || split.train.n_classes != split.test.n_classes)
        throw FormatError("event dataset: train and test shapes differ (set input_size and classes)");
      break;
    }
    case DatasetKind::synthetic: {
      if (spec.classes < 2) throw ConfigError("synthetic dataset needs at least two classes");
      EncoderConfig e = enc;
      e.scheme = EncoderScheme::event;
      // One generator call so both splits share the class motifs.
      const auto all = make_synthetic_events(spec.classes, spec.train_samples + spec.test_samples,
                                             spec.synthetic_seed, spec.synthetic);
      EventSet train, test;
      for (EventSet* part : {&train, &test}) {
        part->input_size = all.input_size;
        part->n_classes = all.n_classes;
      }
      for (std::size_t i = 0; i < all.streams.size(); ++i) {
        EventSet& part = i < spec.train_samples ? train : test;
        part.streams.push_back(all.streams[i]);
        part.labels.push_back(all.labels[i]);
      }
      split.train = events_to_dataset(train, e, "synthetic");
      split.test = events_to_dataset(test, e, "synthetic");
      break;
    }
  }
  split.train = limited(split.train, spec.train_limit);
  split.test = limited(split.test, spec.test_limit);
  if (split.train.size() == 0 || split.test.size() == 0) throw ConfigError("dataset: empty train or test split");
  return split;
}

std::vector<RunRecord> BenchResult::records() const {
  std::vector<RunRecord> out;
  for (const auto& r : runs) out.insert(out.end(), r.rows.begin(), r.rows.end());
  return out;
}

std::vector<const RunOutcome*> BenchResult::of(Family f) const {
  std::vector<const RunOutcome*> out;
  for (const auto& r : runs)
    if (r.family == f) out.push_back(&r);
  return out;
}

bool BenchResult::all_ok() const {
  for (const auto& r : runs)
    if (!r.ok) return false;
  return true;
}

namespace {

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const DatasetSplit& data, const RunOptions& opts)
      : cfg_(cfg), data_(data), opts_(opts), window_(cfg.eval_window()) {}

  RunOutcome run(Family f, std::uint64_t seed) {
    RunOutcome out;
    out.family = f;
    out.seed = seed;
    try {
      switch (f) {
        case Family::ann: run_ann(out); break;
        case Family::converted_snn: run_converted(out); break;
        case Family::surrogate_snn: run_surrogate(out); break;
        case Family::stdp_snn: run_stdp(out); break;
      }
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
      log(to_string(f) + " seed " + std::to_string(seed) + " failed: " + out.error);
    }
    return out;
  }

  // Models of the last run, for saving.
  std::optional<AnnModel> ann_model;
  std::optional<Network> snn_model;
  std::optional<StdpModel> stdp_model;
  std::optional<Optimizer> optimizer;

 private:
  void log(const std::string& s) const {
    if (opts_.verbose) std::cerr << "[" << cfg_.name << "] " << s << std::endl;
  }

  bool evaluated(int epoch, int last) const { return epoch == last || epoch % cfg_.eval_every == 0; }

  RunRecord base_row(Family f, std::uint64_t seed, int epoch) const {
    RunRecord r;
    r.run_id = cfg_.name + "-" + to_string(f) + "-s" + std::to_string(seed);
    r.seed = seed;
    r.model = to_string(f);
    r.dataset = data_.test.name;
    r.epoch = epoch;
    r.train_loss = r.train_acc = r.test_acc = kNan;
    r.latency_ms_mean = r.spikes_per_inference_mean = r.synops_per_inference_mean = kNan;
    r.energy_mJ_mean = r.efficiency = kNan;
    return r;
  }

  void fill_spiking(RunRecord& r, const InferenceStats& st) const {
    r.test_acc = st.accuracy;
    r.latency_ms_mean = st.decided ? st.latency_steps_mean * cfg_.lif.dt : kNan;
    r.spikes_per_inference_mean = st.spikes_mean;
    r.synops_per_inference_mean = st.synops_mean;
    r.energy_mJ_mean = energy_mj(st.spikes_mean, st.synops_mean, cfg_.energy);
    r.efficiency = r.energy_mJ_mean > 0.0 ? energy_efficiency(st.accuracy, r.energy_mJ_mean) : kNan;
  }

  double clock(std::chrono::steady_clock::time_point start) const {
    if (!cfg_.record_wall_clock) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  const AnnModel& trained_ann(std::uint64_t seed, RunOutcome* out) {
    if (ann_seed_ == seed && ann_model) {
      if (out) {
        out->rows = ann_rows_;
        out->stats.assign(ann_rows_.size(), std::nullopt);
      }
      return *ann_model;
    }
    std::vector<std::size_t> sizes{data_.train.n_features};
    sizes.insert(sizes.end(), cfg_.ann.hidden.begin(), cfg_.ann.hidden.end());
    sizes.push_back(data_.train.n_classes);
    AnnModel m = ann_init(sizes, seed);
    AnnTrainConfig tc;
    tc.opt = cfg_.ann.opt;
    tc.epochs = cfg_.ann.epochs;
    tc.batch_size = cfg_.ann.batch_size;
    tc.seed = seed;
    ann_rows_.clear();
    const auto start = std::chrono::steady_clock::now();
    const Dataset train = limited(data_.train, cfg_.ann.train_limit);
    ann_train(m, train, data_.test, tc, [&](const EpochStats& s) {
      RunRecord r = base_row(Family::ann, seed, s.epoch);
      r.train_loss = s.train_loss;
      r.train_acc = s.train_acc;
      r.test_acc = s.test_acc;
      r.spikes_per_inference_mean = 0.0;
      r.synops_per_inference_mean = 0.0;
      r.energy_mJ_mean = ann_energy_mj(cfg_.energy);
      r.efficiency = energy_efficiency(s.test_acc, r.energy_mJ_mean);
      r.wall_clock_s = clock(start);
      ann_rows_.push_back(r);
      log("ann seed " + std::to_string(seed) + " epoch " + std::to_string(s.epoch) + " loss " +
          format_double(s.train_loss) + " test " + format_double(s.test_acc));
    });
    if (cfg_.ann.epochs == 0) {
      RunRecord r = base_row(Family::ann, seed, 0);
      r.test_acc = ann_evaluate(m, data_.test);
      r.spikes_per_inference_mean = r.synops_per_inference_mean = 0.0;
      r.energy_mJ_mean = ann_energy_mj(cfg_.energy);
      r.efficiency = energy_efficiency(r.test_acc, r.energy_mJ_mean);
      ann_rows_.push_back(r);
    }
    ann_model = std::move(m);
    ann_seed_ = seed;
    if (out) {
      out->rows = ann_rows_;
      out->stats.assign(ann_rows_.size(), std::nullopt);
    }
    return *ann_model;
  }

  void run_ann(RunOutcome& out) { trained_ann(out.seed, &out); }

  void run_converted(RunOutcome& out) {
    const AnnModel& ann = trained_ann(out.seed, nullptr);
    const auto start = std::chrono::steady_clock::now();
    const Dataset calib = data_.train.head(cfg_.conversion.calibration_samples);
    const CalibrationStats stats = calibrate(ann, calib, cfg_.conversion.percentile);
    ConversionOptions co;
    co.input_mode = cfg_.conversion.input_mode;
    co.input_rate = cfg_.encoder.rate_probability();
    Network snn = convert(ann, stats, cfg_.lif, co);
    EncoderConfig enc = cfg_.encoder;
    enc.seed = out.seed;
    std::vector<int> windows = cfg_.conversion.windows;
    if (std::find(windows.begin(), windows.end(), window_) == windows.end()) windows.push_back(window_);
    ConversionEval ev = eval_converted(snn, ann, stats, data_.test, windows, co.input_mode, enc,
                                      cfg_.conversion.probe_samples);
    const InferenceStats* at_window = nullptr;
    for (const auto& w : ev.windows)
      if (w.window == window_) at_window = &w.stats;
    RunRecord r0 = base_row(Family::converted_snn, out.seed, 0);
    fill_spiking(r0, *at_window);
    r0.wall_clock_s = clock(start);
    out.rows.push_back(r0);
    out.stats.push_back(*at_window);
    log("converted seed " + std::to_string(out.seed) + " T=" + std::to_string(window_) + " acc " +
        format_double(at_window->accuracy));
    out.conversion = std::move(ev);
    out.calibration = stats;

    if (cfg_.conversion.fine_tune_epochs > 0) {
      SurrogateConfig sc = cfg_.surrogate.trainer;
      sc.opt = cfg_.conversion.fine_tune_opt;
      sc.epochs = cfg_.conversion.fine_tune_epochs;
      sc.seed = out.seed;
      sc.encoder = enc;
      const Dataset train = limited(data_.train, cfg_.surrogate.train_limit);
      const Dataset test = scaled_for(stats, data_.test);
      const Dataset train_scaled = scaled_for(stats, train);
      Optimizer opt = make_optimizer(snn, sc.opt);
      train_surrogate(snn, train_scaled, {}, sc, [&](const EpochStats& s) {
        RunRecord r = base_row(Family::converted_snn, out.seed, s.epoch);
        r.train_loss = s.train_loss;
        r.train_acc = s.train_acc;
        std::optional<InferenceStats> st;
        if (evaluated(s.epoch, sc.epochs)) {
          st = evaluate_network(snn, test, enc, InputMode::spikes, window_);
          fill_spiking(r, *st);
        }
        r.wall_clock_s = clock(start);
        out.rows.push_back(r);
        out.stats.push_back(st);
        log("converted fine-tune seed " + std::to_string(out.seed) + " epoch " + std::to_string(s.epoch) +
            " loss " + format_double(s.train_loss));
      }, &opt);
      optimizer = std::move(opt);
    }
    snn_model = std::move(snn);
  }

  // Converted networks see inputs divided by lambda_0 (1 for MNIST in [0,1]
  // unless the calibration says otherwise).
  static Dataset scaled_for(const CalibrationStats& stats, const Dataset& d) {
    if (stats.lambda.front() == 1.0 || !d.is_static()) return d;
    Dataset s = d;
    for (double& x : s.x) x /= stats.lambda.front();
    return s;
  }

  void run_surrogate(RunOutcome& out) {
    SurrogateConfig sc = cfg_.surrogate.trainer;
    sc.seed = out.seed;
    sc.encoder = cfg_.encoder;
    sc.encoder.seed = out.seed;
    Topology topo;
    topo.layer_sizes.push_back(data_.train.n_features);
    topo.layer_sizes.insert(topo.layer_sizes.end(), cfg_.surrogate.hidden.begin(), cfg_.surrogate.hidden.end());
    topo.layer_sizes.push_back(data_.train.n_classes);
    Network net = surrogate_init(topo, cfg_.lif, out.seed, sc.init_gain);
    const Dataset train = limited(data_.train, cfg_.surrogate.train_limit);
    const auto start = std::chrono::steady_clock::now();
    Optimizer opt = make_optimizer(net, sc.opt);
    train_surrogate(net, train, {}, sc, [&](const EpochStats& s) {
      RunRecord r = base_row(Family::surrogate_snn, out.seed, s.epoch);
      r.train_loss = s.train_loss;
      r.train_acc = s.train_acc;
      std::optional<InferenceStats> st;
      if (evaluated(s.epoch, sc.epochs)) {
        st = evaluate_network(net, data_.test, sc.encoder, InputMode::spikes, window_);
        fill_spiking(r, *st);
      }
      r.wall_clock_s = clock(start);
      out.rows.push_back(r);
      out.stats.push_back(st);
      log("surrogate seed " + std::to_string(out.seed) + " epoch " + std::to_string(s.epoch) + " loss " +
          format_double(s.train_loss) + (st ? " test " + format_double(st->accuracy) : std::string()));
    }, &opt);
    if (sc.epochs == 0) {
      RunRecord r = base_row(Family::surrogate_snn, out.seed, 0);
      const auto st = evaluate_network(net, data_.test, sc.encoder, InputMode::spikes, window_);
      fill_spiking(r, st);
      out.rows.push_back(r);
      out.stats.push_back(st);
    }
    snn_model = std::move(net);
    optimizer = std::move(opt);
  }

  void run_stdp(RunOutcome& out) {
    StdpConfig sc = cfg_.stdp.trainer;
    sc.seed = out.seed;
    sc.lif = cfg_.lif;
    sc.encoder = cfg_.encoder;
    sc.encoder.seed = out.seed;
    if (sc.encoder.steps() != window_) sc.encoder.window_ms = window_ * sc.encoder.dt;
    const Dataset train = limited(data_.train, cfg_.stdp.train_limit);
    const Dataset calib = data_.train.head(cfg_.stdp.calibration_samples);
    StdpModel model = stdp_init(train, sc);
    const auto start = std::chrono::steady_clock::now();
    train_stdp(model, train, calib, {}, sc, [&](const StdpPass& p) {
      RunRecord r = base_row(Family::stdp_snn, out.seed, p.pass);
      r.train_acc = p.calib_acc;
      r.train_loss = 1.0 - p.calib_acc / 100.0;
      std::optional<InferenceStats> st;
      if (evaluated(p.pass, sc.epochs)) {
        st = stdp_inference(model, data_.test, sc.encoder);
        fill_spiking(r, *st);
      }
      r.wall_clock_s = clock(start);
      out.rows.push_back(r);
      out.stats.push_back(st);
      out.calib_acc.push_back(p.calib_acc);
      log("stdp seed " + std::to_string(out.seed) + " pass " + std::to_string(p.pass) + " calib " +
          format_double(p.calib_acc) + (st ? " test " + format_double(st->accuracy) : std::string()));
    });
    if (sc.epochs == 0) {
      model.labels = assign_labels(stdp_class_responses(model, calib, sc.encoder, mix_seed(sc.seed, 0x63616cULL)));
      RunRecord r = base_row(Family::stdp_snn, out.seed, 0);
      const auto st = stdp_inference(model, data_.test, sc.encoder);
      fill_spiking(r, st);
      out.rows.push_back(r);
      out.stats.push_back(st);
    }
    stdp_model = std::move(model);
  }

  const ExperimentConfig& cfg_;
  const DatasetSplit& data_;
  RunOptions opts_;
  int window_;
  std::uint64_t ann_seed_ = 0;
  std::vector<RunRecord> ann_rows_;
};

std::vector<RunFailure> failures_of(const BenchResult& res) {
  std::vector<RunFailure> out;
  for (const auto& r : res.runs)
    if (!r.ok) out.push_back({to_string(r.family), r.seed, r.error});
  return out;
}

Json failures_json(const std::vector<RunFailure>& failures) {
  Json j = Json::array();
  for (const auto& f : failures) j.push_back(Json{{"family", f.family}, {"seed", f.seed}, {"error", f.error}});
  return j;
}

std::vector<RunFailure> failures_from_json(const Json& j) {
  std::vector<RunFailure> out;
  if (!j.is_array()) throw FormatError("failures.json: expected an array");
  for (const auto& e : j) {
    require_known_keys(e, {"family", "seed", "error"}, "failures.json");
    out.push_back({e.at("family").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                   e.at("error").get<std::string>()});
  }
  return out;
}

void write_outputs(const fs::path& dir, const ExperimentConfig& cfg, const BenchResult& res) {
  const auto records = res.records();
  const auto failures = failures_of(res);
  write_metrics_csv(dir / "metrics.csv", records);
  write_json_file(dir / "failures.json", failures_json(failures));
  write_json_file(dir / "config.json", config_to_json(cfg));
  for (const auto& r : res.runs) {
    if (!r.conversion || !r.calibration) continue;
    write_json_file(dir / "models" / ("conversion_s" + std::to_string(r.seed) + ".json"),
                    conversion_report_to_json(*r.calibration, *r.conversion));
  }
  if (!records.empty()) {
    write_json_file(dir / "aggregate.json", build_aggregate(records, failures));
    for (PlotKind k : {PlotKind::convergence, PlotKind::accuracy_energy, PlotKind::latency, PlotKind::energy_spikes})
      emit_plot_data(records, k, dir / "plots");
  }
}

}  // namespace

BenchResult run_experiment(const ExperimentConfig& cfg, const fs::path& data_dir, const RunOptions& opts) {
  cfg.validate();
  const DatasetSplit data = load_dataset(cfg.dataset, cfg.encoder, data_dir);
  const fs::path out_dir = cfg.out_dir.empty() ? fs::path("runs") / cfg.name : fs::path(cfg.out_dir);
  BenchResult res;
  Runner runner(cfg, data, opts);
  for (std::uint64_t seed : cfg.seeds) {
    for (Family f : kFamilies) {
      if (std::find(cfg.families.begin(), cfg.families.end(), f) == cfg.families.end()) continue;
      res.runs.push_back(runner.run(f, seed));
      const RunOutcome& r = res.runs.back();
      if (!opts.write_outputs || !r.ok) continue;
      const std::string stem = plot_name(f) + "_s" + std::to_string(seed);
      const fs::path models = out_dir / "models";
      if (f == Family::ann && runner.ann_model) write_json_file(models / (stem + ".json"), ann_to_json(*runner.ann_model));
      if ((f == Family::converted_snn || f == Family::surrogate_snn) && runner.snn_model)
        write_json_file(models / (stem + ".json"), network_to_json(*runner.snn_model));
      if (f == Family::surrogate_snn && runner.optimizer)
        write_json_file(models / (stem + "_optimizer.json"), optimizer_state_to_json(*runner.optimizer));
      if (f == Family::stdp_snn && runner.stdp_model)
        write_json_file(models / (stem + ".json"), stdp_model_to_json(*runner.stdp_model));
    }
  }
  if (opts.write_outputs) write_outputs(out_dir, cfg, res);
  return res;
}

std::vector<RunRecord> final_rows(const std::vector<RunRecord>& runs) {
  std::vector<RunRecord> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : runs) {
    auto it = index.find(r.run_id);
    if (it == index.end()) {
      index.emplace(r.run_id, out.size());
      out.push_back(r);
    } else if (r.epoch >= out[it->second].epoch) {
      out[it->second] = r;
    }
  }
  return out;
}

namespace {

Json summary_json(const Summary& s) {
  auto num = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
  return Json{{"mean", num(s.mean)}, {"std", num(s.std)}, {"n", s.n}, {"std_undefined", s.std_undefined}};
}

// Per-run curves keyed by run_id, rows sorted by epoch (epoch >= 1 only).
std::map<std::string, std::vector<RunRecord>> curves(const std::vector<RunRecord>& runs, const std::string& model) {
  std::map<std::string, std::vector<RunRecord>> out;
  for (const auto& r : runs)
    if (r.model == model && r.epoch >= 1) out[r.run_id].push_back(r);
  for (auto& [id, rows] : out)
    std::sort(rows.begin(), rows.end(), [](const RunRecord& a, const RunRecord& b) { return a.epoch < b.epoch; });
  return out;
}

}  // namespace

Json build_aggregate(const std::vector<RunRecord>& runs, const std::vector<RunFailure>& failures) {
  if (runs.empty()) throw ConfigError("aggregate: no runs");
  Json fams = Json::object();
  const auto finals = final_rows(runs);
  for (Family f : kFamilies) {
    std::vector<RunRecord> mine;
    for (const auto& r : finals)
      if (r.model == to_string(f)) mine.push_back(r);
    if (mine.empty()) continue;
    const MetricsReport rep = aggregate(mine);
    Json metrics = Json::object();
    for (const auto& [name, s] : rep.aggregates) metrics[name] = summary_json(s);
    Json conv = Json::array();
    for (const auto& [id, rows] : curves(runs, to_string(f))) {
      std::vector<double> loss;
      for (const auto& r : rows) loss.push_back(r.train_loss);
      if (loss.empty() || !std::isfinite(loss.front())) continue;
      const auto e = convergence_epoch(loss, {"train_loss", 0.5 * loss.front(), Direction::at_most});
      conv.push_back(Json{{"run_id", id}, {"epoch", e ? Json(*e) : Json(nullptr)}});
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& r : mine) seeds.push_back(r.seed);
    fams[to_string(f)] = Json{{"seeds", seeds},
                              {"final_epoch", mine.front().epoch},
                              {"metrics", metrics},
                              {"convergence_epoch_half_initial_loss", conv}};
  }
  return Json{{"dataset", runs.front().dataset},
              {"rows", runs.size()},
              {"families", fams},
              {"failures", failures_json(failures)},
              {"complete", failures.empty()}};
}

namespace {

std::string cell(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

// Mean and sample std of the finite values; n == 0 when none.
Summary finite_summary(const std::vector<double>& xs) {
  std::vector<double> f;
  for (double x : xs)
    if (std::isfinite(x)) f.push_back(x);
  if (f.empty()) return Summary{kNan, kNan, 0, true};
  return summarize(f);
}

}  // namespace

std::vector<fs::path> emit_plot_data(const std::vector<RunRecord>& runs, PlotKind kind, const fs::path& dir) {
  if (runs.empty()) throw ConfigError("emit_plot_data: empty report set");
  for (const auto& r : runs)
    if (r.dataset != runs.front().dataset) throw ConfigError("emit_plot_data: runs cover several datasets");
  std::vector<fs::path> written;
  const Family snn_families[] = {Family::converted_snn, Family::surrogate_snn, Family::stdp_snn};
  const auto finals = final_rows(runs);
  auto final_summary = [&](Family f, double RunRecord::*field) {
    std::vector<double> xs;
    for (const auto& r : finals)
      if (r.model == to_string(f)) xs.push_back(r.*field);
    return finite_summary(xs);
  };

  if (kind == PlotKind::convergence) {
    std::string loss = "epoch,converted,surrogate,stdp\n";
    std::string acc = "epoch";
    for (Family f : snn_families)
      for (const char* suffix : {"_mean", "_lower", "_upper"}) acc += "," + plot_name(f) + suffix;
    acc += "\n";
    std::map<int, std::map<Family, std::vector<double>>> losses, accs;
    for (const auto& r : runs) {
      if (r.epoch < 1) continue;
      for (Family f : snn_families) {
        if (r.model != to_string(f)) continue;
        losses[r.epoch][f].push_back(r.train_loss);
        accs[r.epoch][f].push_back(r.test_acc);
      }
    }
    std::set<int> epochs;
    for (const auto& [e, _] : losses) epochs.insert(e);
    for (int e : epochs) {
      loss += std::to_string(e);
      acc += std::to_string(e);
      for (Family f : snn_families) {
        const Summary l = finite_summary(losses[e][f]);
        loss += "," + cell(l.mean);
        const Summary a = finite_summary(accs[e][f]);
        if (a.n == 0) {
          acc += ",,,";
        } else {
          acc += "," + cell(a.mean) + "," + cell(a.mean - a.std) + "," + cell(a.mean + a.std);
        }
      }
      loss += "\n";
      acc += "\n";
    }
    written.push_back(dir / "convergence_loss.csv");
    write_text_file(written.back(), loss);
    written.push_back(dir / "convergence_accuracy.csv");
    write_text_file(written.back(), acc);
  } else if (kind == PlotKind::latency) {
    std::string s = "family,latency_ms\n";
    for (Family f : kFamilies) s += plot_name(f) + "," + cell(final_summary(f, &RunRecord::latency_ms_mean).mean) + "\n";
    written.push_back(dir / "latency.csv");
    write_text_file(written.back(), s);
  } else if (kind == PlotKind::energy_spikes) {
    std::string s = "family,energy_mJ,spikes_per_inference\n";
    for (Family f : kFamilies)
      s += plot_name(f) + "," + cell(final_summary(f, &RunRecord::energy_mJ_mean).mean) + "," +
           cell(final_summary(f, &RunRecord::spikes_per_inference_mean).mean) + "\n";
    written.push_back(dir / "energy_spikes.csv");
    write_text_file(written.back(), s);
  } else {
    std::string s = "family,accuracy_mean,accuracy_std,energy_mJ\n";
    for (Family f : kFamilies) {
      const Summary a = final_summary(f, &RunRecord::test_acc);
      s += plot_name(f) + "," + cell(a.mean) + "," + cell(a.std) + "," +
           cell(final_summary(f, &RunRecord::energy_mJ_mean).mean) + "\n";
    }
    written.push_back(dir / "accuracy_energy.csv");
    write_text_file(written.back(), s);
  }
  return written;
}

void write_report(const fs::path& out_dir) {
  const auto runs = read_metrics_csv(out_dir / "metrics.csv");
  std::vector<RunFailure> failures;
  if (fs::exists(out_dir / "failures.json")) failures = failures_from_json(read_json_file(out_dir / "failures.json"));
  write_json_file(out_dir / "aggregate.json", build_aggregate(runs, failures));
  for (PlotKind k : {PlotKind::convergence, PlotKind::accuracy_energy, PlotKind::latency, PlotKind::energy_spikes})
    emit_plot_data(runs, k, out_dir / "plots");
}

}  // namespace snnbench
