// snnbench command line: train, convert, eval, bench, report.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "snnbench/bench.hpp"
#include "snnbench/error.hpp"

using namespace snnbench;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data_dir;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
  if (need_config) opt->required();
  cmd->add_option("--seed", c.seed, "run a single seed instead of the configured list");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--data-dir", c.data_dir, "dataset root (default: $SNNBENCH_DATA_DIR)");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

ExperimentConfig effective_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (cfg.out_dir.empty()) cfg.out_dir = (fs::path("runs") / cfg.name).string();
  cfg.validate();
  return cfg;
}

int report_failures(const BenchResult& res) {
  int failed = 0;
  for (const auto& r : res.runs) {
    if (r.ok) continue;
    ++failed;
    std::cerr << "failed: " << to_string(r.family) << " seed " << r.seed << ": " << r.error << "\n";
  }
  return failed ? kRuntimeError : kOk;
}

void print_finals(const BenchResult& res) {
  for (const auto& r : final_rows(res.records()))
    std::printf("%-28s epoch %3d  test_acc %7.3f  latency_ms %7.3f  spikes %9.1f  energy_mJ %8.4f\n",
                r.run_id.c_str(), r.epoch, r.test_acc, r.latency_ms_mean, r.spikes_per_inference_mean,
                r.energy_mJ_mean);
}

int cmd_run(const Common& c, const std::vector<std::string>& families, bool training_only) {
  ExperimentConfig cfg = effective_config(c);
  if (!families.empty()) {
    cfg.families.clear();
    for (const auto& f : families) cfg.families.push_back(family_from_string(f));
  }
  if (training_only)
    for (Family f : cfg.families)
      if (f == Family::converted_snn) throw ConfigError("train: use the convert subcommand for converted_snn");
  cfg.validate();
  RunOptions opts;
  opts.verbose = !c.quiet;
  const BenchResult res = run_experiment(cfg, resolve_data_dir(c.data_dir), opts);
  print_finals(res);
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return report_failures(res);
}

int cmd_convert(const Common& c, const std::string& ann_path) {
  ExperimentConfig cfg = effective_config(c);
  const auto data = load_dataset(cfg.dataset, cfg.encoder, resolve_data_dir(c.data_dir));
  if (ann_path.empty()) {
    // No checkpoint: train the source ANN first, through the bench path.
    cfg.families = {Family::ann, Family::converted_snn};
    RunOptions opts;
    opts.verbose = !c.quiet;
    const BenchResult res = run_experiment(cfg, resolve_data_dir(c.data_dir), opts);
    print_finals(res);
    std::cout << "outputs in " << cfg.out_dir << "\n";
    return report_failures(res);
  }
  const AnnModel ann = ann_from_json(read_json_file(ann_path));
  const auto calib = data.train.head(cfg.conversion.calibration_samples);
  const CalibrationStats stats = calibrate(ann, calib, cfg.conversion.percentile);
  ConversionOptions co;
  co.input_mode = cfg.conversion.input_mode;
  co.input_rate = cfg.encoder.rate_probability();
  const Network snn = convert(ann, stats, cfg.lif, co);
  EncoderConfig enc = cfg.encoder;
  enc.seed = cfg.seeds.front();
  const ConversionEval ev =
      eval_converted(snn, ann, stats, data.test, cfg.conversion.windows, co.input_mode, enc, cfg.conversion.probe_samples);
  const fs::path out = cfg.out_dir;
  write_json_file(out / "converted.json", network_to_json(snn));
  write_json_file(out / "conversion_report.json", conversion_report_to_json(stats, ev));
  std::printf("source ann test_acc %.3f\n", ann_evaluate(ann, data.test));
  for (const auto& w : ev.windows)
    std::printf("T=%-4d acc %7.3f  spikes %9.1f  latency_steps %7.3f\n", w.window, w.stats.accuracy,
                w.stats.spikes_mean, w.stats.latency_steps_mean);
  std::cout << "wrote " << (out / "converted.json").string() << "\n";
  return kOk;
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& mode, int window) {
  ExperimentConfig cfg = effective_config(c);
  const auto data = load_dataset(cfg.dataset, cfg.encoder, resolve_data_dir(c.data_dir));
  const Json j = read_json_file(model_path);
  EncoderConfig enc = cfg.encoder;
  enc.seed = cfg.seeds.front();
  if (window <= 0) window = cfg.eval_window();
  Json result;
  if (!j.contains("lif")) {
    const AnnModel ann = ann_from_json(j);
    result = Json{{"model", "ann"}, {"accuracy", ann_evaluate(ann, data.test)}, {"samples", data.test.size()}};
  } else if (json_has_labels(j)) {
    const StdpModel m = stdp_model_from_json(j);
    enc = encoder_for_window(enc, window);
    result = inference_to_json(stdp_inference(m, data.test, enc));
    result["model"] = "stdp_snn";
  } else {
    const Network net = network_from_json(j);
    const InputMode im = mode.empty() ? InputMode::spikes : input_mode_from_string(mode);
    result = inference_to_json(evaluate_network(net, data.test, enc, im, window));
    result["model"] = "snn";
    result["input_mode"] = to_string(im);
  }
  result["window"] = window;
  std::cout << result.dump(1) << "\n";
  if (!c.out.empty()) write_json_file(fs::path(c.out) / "eval.json", result);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snnbench: spiking network training and benchmarking"};
  app.require_subcommand(1);

  Common train_c, convert_c, eval_c, bench_c, report_c;
  std::vector<std::string> train_families;
  std::string ann_path, model_path, mode;
  int window = 0;

  auto* train = app.add_subcommand("train", "train ann, surrogate_snn and/or stdp_snn models");
  add_common(train, train_c, true);
  train->add_option("--family", train_families, "restrict to these families");

  auto* conv = app.add_subcommand("convert", "convert a trained ANN checkpoint to a spiking network");
  add_common(conv, convert_c, true);
  conv->add_option("--ann", ann_path, "ANN checkpoint JSON (trained from the config when absent)");

  auto* eval = app.add_subcommand("eval", "evaluate a saved model on the test split");
  add_common(eval, eval_c, true);
  eval->add_option("--model", model_path, "model JSON")->required();
  eval->add_option("--input-mode", mode, "rate_encoded or analog_current");
  eval->add_option("--window", window, "steps (default: config window)");

  auto* bench = app.add_subcommand("bench", "full multi-family comparison over all seeds");
  add_common(bench, bench_c, true);

  auto* report = app.add_subcommand("report", "re-aggregate an existing output directory");
  add_common(report, report_c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return cmd_run(train_c, train_families, true);
    if (*conv) return cmd_convert(convert_c, ann_path);
    if (*eval) return cmd_eval(eval_c, model_path, mode, window);
    if (*bench) return cmd_run(bench_c, {}, false);
    if (*report) {
      fs::path dir = report_c.out;
      if (dir.empty() && !report_c.config.empty()) dir = effective_config(report_c).out_dir;
      if (dir.empty()) throw ConfigError("report: pass --out <dir> or --config");
      write_report(dir);
      std::cout << "wrote " << (dir / "aggregate.json").string() << " and plots/\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
