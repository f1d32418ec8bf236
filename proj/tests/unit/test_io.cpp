#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <unistd.h>

#include "doctest.h"
#include "snnbench/error.hpp"
#include "snnbench/io.hpp"

using namespace snnbench;
namespace fs = std::filesystem;

namespace {

Network random_net(std::uint64_t seed, bool bias) {
  Topology t;
  t.layer_sizes = {5, 4, 3};
  t.delays = {1, 2};
  LifParams lif;
  lif.tau_mem = 13.25;
  lif.t_refrac = 2.0;
  Network net = Network::zeros(t, lif);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& w : net.weights)
    for (double& x : w.data) x = n(rng) / 3.0;
  if (bias) net.biases = {{0.1, -0.2, 1e-300, 0.3}, {}};
  return net;
}

RunRecord record(const std::string& id, int epoch, double acc) {
  RunRecord r;
  r.run_id = id;
  r.seed = 3;
  r.model = "surrogate_snn";
  r.dataset = "mnist";
  r.epoch = epoch;
  r.train_loss = 0.1 / 3.0;
  r.train_acc = acc + 1.0;
  r.test_acc = acc;
  r.latency_ms_mean = 9.125;
  r.spikes_per_inference_mean = 1154.9;
  r.synops_per_inference_mean = 123456.789;
  r.energy_mJ_mean = 1.0 / 7.0;
  r.efficiency = acc / (1.0 / 7.0);
  return r;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("snnbench_io_" + tag + "_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("lif parameters round-trip and reject unknown keys") {
  LifParams p;
  p.tau_mem = 7.5;
  p.v_th = 0.8;
  p.t_refrac = 3.0;
  const LifParams q = lif_from_json(lif_to_json(p));
  CHECK(q.tau_mem == p.tau_mem);
  CHECK(q.v_th == p.v_th);
  CHECK(q.t_refrac == p.t_refrac);
  CHECK(q.dt == p.dt);
  Json j = lif_to_json(p);
  j["tau"] = 1.0;
  CHECK_THROWS_AS(lif_from_json(j), FormatError);
  CHECK_THROWS_AS(lif_from_json(Json::array()), FormatError);
}

TEST_CASE("network documents round-trip bit for bit") {
  for (bool bias : {false, true}) {
    const Network net = random_net(5, bias);
    const Json j = network_to_json(net);
    CHECK(network_from_json(j) == net);
    // Through text as well.
    CHECK(network_from_json(Json::parse(j.dump())) == net);
  }
}

TEST_CASE("network documents are validated") {
  const Network net = random_net(6, false);
  Json j = network_to_json(net);
  SUBCASE("unknown key") {
    j["extra"] = 1;
    CHECK_THROWS_AS(network_from_json(j), FormatError);
  }
  SUBCASE("wrong weight count") {
    j["weights"].erase(j["weights"].begin());
    CHECK_THROWS_AS(network_from_json(j), FormatError);
  }
  SUBCASE("wrong matrix size") {
    j["weights"][0].erase(j["weights"][0].begin());
    CHECK_THROWS_AS(network_from_json(j), FormatError);
  }
  CHECK_FALSE(json_has_labels(network_to_json(net)));
}

TEST_CASE("stdp model documents keep labels and inhibition settings") {
  StdpModel m;
  Topology t;
  t.layer_sizes = {6, 3};
  m.net = Network::zeros(t);
  m.net.weights[0](1, 2) = 0.25;
  m.labels.labels = {2, 0, 9};
  m.labels.flagged = {0, 1, 0};
  m.wta.inhibition_ms = 4.0;
  m.wta.normalize_l2 = 2.5;
  const Json j = stdp_model_to_json(m);
  CHECK(json_has_labels(j));
  const StdpModel r = stdp_model_from_json(j);
  CHECK(r.net == m.net);
  CHECK(r.labels.labels == m.labels.labels);
  CHECK(r.labels.flagged == m.labels.flagged);
  CHECK(r.wta.inhibition_ms == 4.0);
  CHECK(r.wta.normalize_l2 == 2.5);

  Json bad = j;
  bad["labels"] = Json::array({1, 2});
  CHECK_THROWS_AS(stdp_model_from_json(bad), FormatError);
  bad["labels"] = Json::array({1, -2, 0});
  CHECK_THROWS_AS(stdp_model_from_json(bad), FormatError);
}

TEST_CASE("ann checkpoints round-trip") {
  const AnnModel m = ann_init({7, 5, 3}, 4);
  CHECK(ann_from_json(ann_to_json(m)) == m);
  CHECK(ann_from_json(Json::parse(ann_to_json(m).dump())) == m);
  Json j = ann_to_json(m);
  j["momentum"] = 0.5;
  CHECK_THROWS_AS(ann_from_json(j), FormatError);
}

TEST_CASE("optimizer state restores moments and step count") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::adam;
  Optimizer a(cfg, {3, 2});
  std::vector<double> p0{1, 2, 3}, p1{4, 5};
  const std::vector<double> g0{0.5, -1, 0.25}, g1{2, -3};
  for (int i = 0; i < 3; ++i) a.step({p0, p1}, {g0, g1}, cfg.lr);

  Optimizer b(cfg, {3, 2});
  optimizer_state_from_json(optimizer_state_to_json(a), b);
  CHECK(b.m == a.m);
  CHECK(b.v == a.v);
  CHECK(b.t == a.t);

  // Continuing from the restored state matches continuing the original.
  std::vector<double> q0 = p0, q1 = p1;
  a.step({p0, p1}, {g0, g1}, cfg.lr);
  b.step({q0, q1}, {g0, g1}, cfg.lr);
  CHECK(p0 == q0);
  CHECK(p1 == q1);

  Optimizer wrong_shape(cfg, {3, 3});
  CHECK_THROWS_AS(optimizer_state_from_json(optimizer_state_to_json(a), wrong_shape), FormatError);
  OptimizerConfig sgd = cfg;
  sgd.kind = OptimizerKind::sgd;
  Optimizer wrong_kind(sgd, {3, 2});
  CHECK_THROWS_AS(optimizer_state_from_json(optimizer_state_to_json(a), wrong_kind), FormatError);
}

TEST_CASE("conversion report carries the calibration") {
  CalibrationStats s;
  s.lambda = {1.0, 2.5, 0.75};
  s.samples = 1000;
  s.percentile = 99.9;
  ConversionEval ev;
  const CalibrationStats r = calibration_from_report(conversion_report_to_json(s, ev));
  CHECK(r.lambda == s.lambda);
  CHECK(r.samples == s.samples);
  CHECK(r.percentile == s.percentile);
}

TEST_CASE("metrics csv has the fixed header and round-trips") {
  const std::string& h = metrics_csv_header();
  CHECK(h.rfind("run_id,seed,model,dataset,epoch,", 0) == 0);
  for (const char* col : {"train_loss", "train_acc", "test_acc", "latency_ms_mean", "spikes_per_inference_mean",
                          "synops_per_inference_mean", "energy_mJ_mean"})
    CHECK(h.find(col) != std::string::npos);

  std::vector<RunRecord> rows{record("surrogate_snn_seed3", 1, 90.73), record("surrogate_snn_seed3", 2, 91.46)};
  rows[0].test_acc = std::numeric_limits<double>::quiet_NaN();
  const std::string text = metrics_csv(rows);
  CHECK(text.rfind(h, 0) == 0);
  const std::vector<RunRecord> back = parse_metrics_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(std::isnan(back[0].test_acc));
  CHECK(back[1].test_acc == rows[1].test_acc);
  CHECK(back[1].energy_mJ_mean == rows[1].energy_mJ_mean);
  CHECK(back[1].synops_per_inference_mean == rows[1].synops_per_inference_mean);
  CHECK(back[1].run_id == rows[1].run_id);
  CHECK(back[1].seed == 3);
  CHECK(back[1].epoch == 2);
  // Emitting the parsed rows reproduces the text exactly.
  CHECK(metrics_csv(back) == text);
}

TEST_CASE("metrics csv rejects malformed input") {
  const std::string text = metrics_csv({record("a", 1, 50.0)});
  CHECK_THROWS_AS(parse_metrics_csv("bogus\n"), FormatError);
  std::string broken = text;
  broken.replace(broken.find("50"), 2, "xx");
  CHECK_THROWS_AS(parse_metrics_csv(broken), FormatError);
  CHECK_THROWS_AS(metrics_csv({record("a,b", 1, 50.0)}), FormatError);
}

TEST_CASE("files round-trip through disk") {
  const fs::path d = temp_dir("files");
  const Network net = random_net(9, true);
  write_json_file(d / "net.json", network_to_json(net));
  CHECK(network_from_json(read_json_file(d / "net.json")) == net);
  const std::vector<RunRecord> rows{record("x", 1, 12.5)};
  write_metrics_csv(d / "metrics.csv", rows);
  CHECK(read_text_file(d / "metrics.csv") == metrics_csv(rows));
  CHECK(read_metrics_csv(d / "metrics.csv").size() == 1);
  CHECK_THROWS(read_json_file(d / "missing.json"));
  write_text_file(d / "bad.json", "{not json");
  CHECK_THROWS_AS(read_json_file(d / "bad.json"), FormatError);
  fs::remove_all(d);
}
