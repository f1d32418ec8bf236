#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snnbench/bench.hpp"
#include "snnbench/codec.hpp"
#include "snnbench/error.hpp"
#include "snnbench/io.hpp"
#include "snnbench/metrics.hpp"
#include "snnbench/network.hpp"
#include "snnbench/neuron.hpp"
#include "snnbench/stdp.hpp"
#include "snnbench/surrogate.hpp"

namespace py = pybind11;
using namespace snnbench;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Rasters cross the boundary as (n_steps, n_units) uint8 arrays.
U8Array raster_to_array(const SpikeRaster& r) {
  U8Array out({r.n_steps(), r.n_units()});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t t = 0; t < r.n_steps(); ++t)
    for (std::size_t u = 0; u < r.n_units(); ++u) v(t, u) = r.at(u, t) ? 1 : 0;
  return out;
}

SpikeRaster array_to_raster(const U8Array& a) {
  if (a.ndim() != 2) throw DimensionError("raster must be a 2-d array (steps, units)");
  auto v = a.unchecked<2>();
  SpikeRaster r(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t t = 0; t < a.shape(0); ++t)
    for (py::ssize_t u = 0; u < a.shape(1); ++u)
      if (v(t, u)) r.set(static_cast<std::size_t>(u), static_cast<std::size_t>(t));
  return r;
}

std::vector<double> to_vector(const F64Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

py::dict trace_to_dict(const SimTrace& tr) {
  py::dict d;
  py::list rasters;
  for (const auto& r : tr.layers) rasters.append(raster_to_array(r));
  d["layers"] = rasters;
  d["spikes_per_layer"] = tr.spikes_per_layer;
  d["synops"] = tr.synops;
  d["output_counts"] = tr.output_counts;
  d["output_first_spike"] = tr.output_first_spike;
  return d;
}

Network parse_network(const std::string& text) { return network_from_json(Json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  py::class_<LifParams>(m, "LifParams")
      .def(py::init<>())
      .def_readwrite("tau_mem", &LifParams::tau_mem)
      .def_readwrite("v_th", &LifParams::v_th)
      .def_readwrite("v_reset", &LifParams::v_reset)
      .def_readwrite("v_rest", &LifParams::v_rest)
      .def_readwrite("t_refrac", &LifParams::t_refrac)
      .def_readwrite("dt", &LifParams::dt)
      .def("beta", &LifParams::beta)
      .def("refrac_steps", &LifParams::refrac_steps)
      .def("validate", &LifParams::validate);

  m.def(
      "lif_step",
      [](const F64Array& v, const std::vector<int>& refrac_left, const F64Array& drive, const LifParams& p) {
        LifState s;
        s.v = to_vector(v);
        s.refrac_left = refrac_left;
        auto [next, spikes] = lif_step(s, to_vector(drive), p);
        return py::make_tuple(next.v, next.refrac_left, spikes);
      },
      py::arg("v"), py::arg("refrac_left"), py::arg("drive"), py::arg("params"),
      "One LIF step; returns (v, refrac_left, spikes).");
  m.def("lif_decay_trajectory", &lif_decay_trajectory, py::arg("v0"), py::arg("steps"), py::arg("params"));

  m.def(
      "encode_rate",
      [](const F64Array& intensities, double window_ms, double dt, double r_max, std::uint64_t seed) {
        EncoderConfig cfg;
        cfg.window_ms = window_ms;
        cfg.dt = dt;
        cfg.r_max = r_max;
        cfg.seed = seed;
        return raster_to_array(encode_rate(to_vector(intensities), cfg));
      },
      py::arg("intensities"), py::arg("window_ms") = 100.0, py::arg("dt") = 1.0, py::arg("r_max") = 200.0,
      py::arg("seed") = 1, "Bernoulli rate code; returns a (steps, units) uint8 array.");

  m.def(
      "simulate",
      [](const std::string& network_json, const U8Array& input, int window) {
        return trace_to_dict(simulate(parse_network(network_json), array_to_raster(input), window));
      },
      py::arg("network_json"), py::arg("input"), py::arg("window"),
      "Runs a network document on a spike raster.");
  m.def(
      "simulate_analog",
      [](const std::string& network_json, const F64Array& input, int window) {
        return trace_to_dict(simulate(parse_network(network_json), AnalogInput{to_vector(input)}, window));
      },
      py::arg("network_json"), py::arg("input"), py::arg("window"),
      "Runs a network document driven by a constant input current.");

  m.def("accuracy", &accuracy, py::arg("correct"), py::arg("total"));
  m.def("energy_mj", [](double spikes, double synops, double e_spike, double e_synapse) {
        EnergyModel em;
        em.e_spike = e_spike;
        em.e_synapse = e_synapse;
        return energy_mj(spikes, synops, em);
      },
      py::arg("spikes"), py::arg("synops"), py::arg("e_spike") = EnergyModel{}.e_spike,
      py::arg("e_synapse") = EnergyModel{}.e_synapse);
  m.def("energy_efficiency", &energy_efficiency, py::arg("accuracy_pct"), py::arg("energy_mj"));
  m.def(
      "convergence_epoch",
      [](const std::vector<double>& curve, double target, bool at_most) {
        ConvergenceQuery q;
        q.target = target;
        q.direction = at_most ? Direction::at_most : Direction::at_least;
        return convergence_epoch(curve, q);
      },
      py::arg("curve"), py::arg("target"), py::arg("at_most") = false);

  m.def(
      "stdp_pair_update",
      [](double dt_pair, double a_plus, double a_minus, double tau_plus, double tau_minus) {
        StdpParams p;
        p.a_plus = a_plus;
        p.a_minus = a_minus;
        p.tau_plus = tau_plus;
        p.tau_minus = tau_minus;
        return stdp_pair_update(dt_pair, p);
      },
      py::arg("dt_pair"), py::arg("a_plus") = StdpParams{}.a_plus, py::arg("a_minus") = StdpParams{}.a_minus,
      py::arg("tau_plus") = StdpParams{}.tau_plus, py::arg("tau_minus") = StdpParams{}.tau_minus);

  m.def(
      "surrogate_derivative",
      [](double u, const std::string& kind, double slope) {
        return surrogate_derivative(u, surrogate_kind_from_string(kind), slope);
      },
      py::arg("u"), py::arg("kind") = "fast_sigmoid", py::arg("slope") = 10.0);

  m.def(
      "normalize_config",
      [](const std::string& text) { return config_to_json(config_from_json(Json::parse(text))).dump(); },
      py::arg("config_json"), "Validates a config document and returns it with defaults filled in.");
  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& data_dir, bool write_outputs) {
        const ExperimentConfig cfg = config_from_json(Json::parse(config_json));
        RunOptions opts;
        opts.write_outputs = write_outputs;
        BenchResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg, resolve_data_dir(data_dir), opts);
        }
        py::list rows;
        for (const RunRecord& r : res.records()) {
          py::dict d;
          d["run_id"] = r.run_id;
          d["seed"] = r.seed;
          d["model"] = r.model;
          d["dataset"] = r.dataset;
          d["epoch"] = r.epoch;
          d["train_loss"] = r.train_loss;
          d["train_acc"] = r.train_acc;
          d["test_acc"] = r.test_acc;
          d["latency_ms_mean"] = r.latency_ms_mean;
          d["spikes_per_inference_mean"] = r.spikes_per_inference_mean;
          d["synops_per_inference_mean"] = r.synops_per_inference_mean;
          d["energy_mJ_mean"] = r.energy_mJ_mean;
          d["efficiency"] = r.efficiency;
          rows.append(d);
        }
        py::list failures;
        for (const RunOutcome& o : res.runs)
          if (!o.ok) failures.append(py::make_tuple(to_string(o.family), o.seed, o.error));
        return py::make_tuple(rows, failures);
      },
      py::arg("config_json"), py::arg("data_dir") = "", py::arg("write_outputs") = false,
      "Runs every configured family and seed; returns (rows, failures).");
  m.def("write_report", [](const std::string& out_dir) { write_report(out_dir); }, py::arg("out_dir"));
}
