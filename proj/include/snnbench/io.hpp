#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "snnbench/annref.hpp"
#include "snnbench/convert.hpp"
#include "snnbench/metrics.hpp"
#include "snnbench/network.hpp"
#include "snnbench/optim.hpp"
#include "snnbench/stdp.hpp"

namespace snnbench {

using Json = nlohmann::json;

// Doubles are written in shortest round-trip form, so parsing an emitted
// document reproduces every value bit for bit. Readers reject unknown keys.

// FormatError unless j is an object whose keys are all in `allowed`.
void require_known_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& what);

Json lif_to_json(const LifParams& p);
LifParams lif_from_json(const Json& j);

Json network_to_json(const Network& net);
Network network_from_json(const Json& j);

// Network document plus "labels" and "wta".
Json stdp_model_to_json(const StdpModel& m);
StdpModel stdp_model_from_json(const Json& j);

Json ann_to_json(const AnnModel& m);
AnnModel ann_from_json(const Json& j);

Json optimizer_state_to_json(const Optimizer& opt);
// Restores moments and step count into an optimizer of matching shape.
void optimizer_state_from_json(const Json& j, Optimizer& opt);

Json conversion_report_to_json(const CalibrationStats& stats, const ConversionEval& eval);
CalibrationStats calibration_from_report(const Json& j);

Json inference_to_json(const InferenceStats& s);

// Model files: a network document with or without "labels".
bool json_has_labels(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// Shortest round-trip decimal form of a double.
std::string format_double(double x);

const std::string& metrics_csv_header();
std::string metrics_csv(const std::vector<RunRecord>& runs);
std::vector<RunRecord> parse_metrics_csv(const std::string& text);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs);
std::vector<RunRecord> read_metrics_csv(const std::filesystem::path& path);

Json aggregate_to_json(const MetricsReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace snnbench
