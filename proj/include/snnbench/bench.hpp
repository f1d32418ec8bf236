#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snnbench/annref.hpp"
#include "snnbench/convert.hpp"
#include "snnbench/io.hpp"
#include "snnbench/metrics.hpp"
#include "snnbench/stdp.hpp"
#include "snnbench/surrogate.hpp"

namespace snnbench {

enum class Family { ann, converted_snn, surrogate_snn, stdp_snn };

std::string to_string(Family f);
Family family_from_string(const std::string& s);
// Short name used in plot files: ann, converted, surrogate, stdp.
std::string plot_name(Family f);

enum class DatasetKind { mnist_idx, event_csv, synthetic };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::mnist_idx;
  // Directory, relative to the data dir unless absolute. mnist_idx expects
  // the four standard IDX files; event_csv expects train.csv and test.csv
  // manifests with rows "file,label" (files relative to the manifest).
  std::string path = "mnist";
  // 0 keeps every sample.
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  // event_csv only; 0 infers them from the data.
  std::size_t input_size = 0;
  std::size_t classes = 0;
  // synthetic only.
  std::size_t train_samples = 400;
  std::size_t test_samples = 200;
  SyntheticEventOptions synthetic;
  std::uint64_t synthetic_seed = 7;
};

struct AnnSection {
  std::vector<std::size_t> hidden{300};
  OptimizerConfig opt;
  int epochs = 20;
  std::size_t batch_size = 64;
  std::size_t train_limit = 0;
};

struct ConversionSection {
  double percentile = 99.9;
  std::size_t calibration_samples = 1000;
  InputMode input_mode = InputMode::analog_current;
  std::vector<int> windows{10, 25, 50, 100, 200};
  std::size_t probe_samples = 200;
  // Surrogate fine-tuning of the converted network (rate-encoded input only).
  int fine_tune_epochs = 0;
  OptimizerConfig fine_tune_opt;
};

struct SurrogateSection {
  std::vector<std::size_t> hidden{300};
  SurrogateConfig trainer;
  std::size_t train_limit = 0;
};

struct StdpSection {
  StdpConfig trainer;
  std::size_t train_limit = 0;
  std::size_t calibration_samples = 2000;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<Family> families{Family::ann, Family::converted_snn, Family::surrogate_snn, Family::stdp_snn};
  DatasetSpec dataset;
  EncoderConfig encoder;
  LifParams lif;
  // Evaluation window in steps; 0 means the encoder window.
  int window = 0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir;
  EnergyModel energy;
  // Test metrics are computed every eval_every epochs and at the last one;
  // other rows carry nan in the test columns.
  int eval_every = 1;
  // Off by default so outputs are byte-identical across runs.
  bool record_wall_clock = false;
  AnnSection ann;
  ConversionSection conversion;
  SurrogateSection surrogate;
  StdpSection stdp;

  int eval_window() const { return window > 0 ? window : encoder.steps(); }
  void validate() const;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// Resolved data directory: explicit value, else SNNBENCH_DATA_DIR, else "data".
std::filesystem::path resolve_data_dir(const std::string& explicit_dir);

DatasetSplit load_dataset(const DatasetSpec& spec, const EncoderConfig& enc,
                          const std::filesystem::path& data_dir);

// One (family, seed) run. rows and stats are aligned; stats is empty for
// epochs whose test metrics were not computed.
struct RunOutcome {
  Family family = Family::ann;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<RunRecord> rows;
  std::vector<std::optional<InferenceStats>> stats;
  // converted_snn only.
  std::optional<ConversionEval> conversion;
  std::optional<CalibrationStats> calibration;
  // stdp_snn only: readout accuracy on the calibration set after each pass.
  std::vector<double> calib_acc;
};

struct BenchResult {
  std::vector<RunOutcome> runs;

  std::vector<RunRecord> records() const;
  std::vector<const RunOutcome*> of(Family f) const;
  bool all_ok() const;
};

struct RunOptions {
  // Write metrics, aggregate, plot data and models to cfg.out_dir.
  bool write_outputs = true;
  // Progress lines to stderr.
  bool verbose = false;
};

// Trains (or converts) and evaluates every configured family for every seed.
// Module errors abort only the affected (family, seed) and are reported in
// the outcome; nothing is dropped silently.
BenchResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                           const RunOptions& opts = {});

struct RunFailure {
  std::string family;
  std::uint64_t seed = 0;
  std::string error;
};

// Final-epoch aggregates per family, convergence epochs and failures.
Json build_aggregate(const std::vector<RunRecord>& runs, const std::vector<RunFailure>& failures);

enum class PlotKind { convergence, accuracy_energy, latency, energy_spikes };

// Writes headered CSV series into dir and returns the paths written.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<RunRecord>& runs, PlotKind kind,
                                                  const std::filesystem::path& dir);

// Rows of the last epoch of every run_id, in first-seen order.
std::vector<RunRecord> final_rows(const std::vector<RunRecord>& runs);

// Re-aggregates an output directory from its metrics.csv (and failures.json).
void write_report(const std::filesystem::path& out_dir);

}  // namespace snnbench
