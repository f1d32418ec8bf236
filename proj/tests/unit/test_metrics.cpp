#include <cmath>
#include <random>

#include "doctest.h"
#include "snnbench/error.hpp"
#include "snnbench/metrics.hpp"

using namespace snnbench;

namespace {

// Training loss per epoch, epochs 1..20, as published for the three SNN families.
const std::vector<double> kConvertedLoss{0.9,  0.85, 0.82, 0.78, 0.76, 0.73, 0.71, 0.7,  0.68, 0.67,
                                         0.66, 0.65, 0.64, 0.63, 0.63, 0.62, 0.62, 0.61, 0.61, 0.6};
const std::vector<double> kSurrogateLoss{0.9,  0.8,  0.73, 0.67, 0.63, 0.6,  0.57, 0.55, 0.53, 0.51,
                                         0.5,  0.49, 0.48, 0.47, 0.46, 0.46, 0.45, 0.45, 0.44, 0.44};
const std::vector<double> kStdpLoss{0.9,  0.88, 0.87, 0.85, 0.84, 0.83, 0.82, 0.81, 0.81, 0.8,
                                    0.79, 0.78, 0.78, 0.77, 0.77, 0.76, 0.76, 0.75, 0.75, 0.75};

ConvergenceQuery at_most(double target) { return {"train_loss", target, Direction::at_most}; }

}  // namespace

TEST_CASE("accuracy") {
  CHECK(accuracy(0, 100) == 0.0);
  CHECK(accuracy(955, 1000) == doctest::Approx(95.5).epsilon(1e-15));
  CHECK(accuracy(981, 1000) == doctest::Approx(98.1).epsilon(1e-15));
  CHECK(accuracy(7, 7) == 100.0);
  CHECK(accuracy(1, 4) == 25.0);
  CHECK(accuracy(3, 8) == 37.5);
  CHECK_THROWS_AS(accuracy(0, 0), ConfigError);
  CHECK_THROWS_AS(accuracy(5, 4), ConfigError);
  for (std::uint64_t total = 1; total < 60; ++total)
    for (std::uint64_t c = 0; c <= total; ++c) {
      const double a = accuracy(c, total);
      CHECK(a >= 0.0);
      CHECK(a <= 100.0);
      CHECK(a == 100.0 * static_cast<double>(c) / static_cast<double>(total));
    }
}

TEST_CASE("latency") {
  CHECK(*latency_ms(10, 0, 1.0) == 10.0);
  CHECK(*latency_ms(4, 4, 1.0) == 0.0);
  CHECK(*latency_ms(12, 2, 0.5) == 5.0);
  CHECK_FALSE(latency_ms(std::nullopt, 0, 1.0));
}

TEST_CASE("energy") {
  EnergyModel m;
  CHECK(energy_mj(0, 0, m) == 0.0);
  EnergyModel spikes_only{1e-3, 0.0, 200.0};
  CHECK(energy_mj(20000, 0, spikes_only) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(energy_mj(4000, 0, spikes_only) == doctest::Approx(4.0).epsilon(1e-12));
  // The remaining 1 mJ of a 5 mJ reading is the synaptic share at the default cost.
  CHECK(energy_mj(4000, 4e6, m) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(ann_energy_mj(m) == 200.0);
  EnergyModel bad;
  bad.e_spike = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("energy is exactly linear") {
  const EnergyModel m;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1e5);
  for (int k = 0; k < 1000; ++k) {
    const double s = std::floor(u(rng)), c = std::floor(u(rng) * 100);
    // Powers of two keep every product exact.
    for (double a : {0.0, 0.5, 1.0, 2.0, 8.0, 1024.0})
      CHECK(energy_mj(a * s, a * c, m) == a * energy_mj(s, c, m));
    CHECK(energy_mj(s, c, m) == m.e_spike * s + m.e_synapse * c);
  }
}

TEST_CASE("efficiency") {
  CHECK(energy_efficiency(95.5, 5.0) == doctest::Approx(19.1).epsilon(1e-12));
  CHECK(energy_efficiency(50.0, 50.0) == 1.0);
  CHECK(energy_efficiency(80.0, 8.0) == 2.0 * energy_efficiency(80.0, 16.0));
  CHECK_THROWS_AS(energy_efficiency(50.0, 0.0), ConfigError);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 100);
  for (int k = 0; k < 500; ++k) {
    const double a = u(rng), e = u(rng);
    CHECK(energy_efficiency(a, 2 * e) == energy_efficiency(a, e) / 2);
  }
}

TEST_CASE("convergence epochs on the published loss columns") {
  CHECK(convergence_epoch(kSurrogateLoss, at_most(0.50)) == 11);
  CHECK(convergence_epoch(kConvertedLoss, at_most(0.65)) == 12);
  CHECK_FALSE(convergence_epoch(kStdpLoss, at_most(0.50)));
  CHECK(convergence_epoch(kStdpLoss, at_most(0.75)) == 18);
  const std::vector<double> acc{10, 50, 70, 90, 95};
  CHECK(convergence_epoch(acc, {"test_acc", 90, Direction::at_least}) == 4);
  CHECK_FALSE(convergence_epoch(acc, {"test_acc", 99, Direction::at_least}));
  CHECK_THROWS_AS(convergence_epoch(acc, {"test_acc", NAN, Direction::at_least}), ConfigError);
}

TEST_CASE("convergence epoch ignores anything after the first hit") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> c(15);
    for (auto& x : c) x = u(rng);
    const auto q = at_most(0.2);
    const auto e = convergence_epoch(c, q);
    if (!e) continue;
    auto longer = c;
    for (int j = 0; j < 10; ++j) longer.push_back(u(rng));
    CHECK(convergence_epoch(longer, q) == e);
    std::vector<double> prefix(c.begin(), c.begin() + *e);
    CHECK(convergence_epoch(prefix, q) == e);
  }
}

TEST_CASE("summary statistics") {
  const std::vector<double> acc{97.6, 97.8, 98.0, 97.7, 97.9};
  const Summary s = summarize(acc);
  CHECK(s.mean == doctest::Approx(97.8).epsilon(1e-12));
  CHECK(s.std == doctest::Approx(0.158113883).epsilon(1e-8));
  CHECK(s.n == 5);
  CHECK_FALSE(s.std_undefined);

  const std::vector<double> same(4, 3.25);
  CHECK(summarize(same).std == 0.0);
  const std::vector<double> one{42.0};
  const Summary o = summarize(one);
  CHECK(o.mean == 42.0);
  CHECK(o.std == 0.0);
  CHECK(o.std_undefined);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), ConfigError);
}

TEST_CASE("mean shifts with a translation and std does not") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> v(6);
    for (auto& x : v) x = u(rng);
    auto w = v;
    const double c = u(rng);
    for (auto& x : w) x += c;
    const Summary a = summarize(v), b = summarize(w);
    CHECK(b.mean == doctest::Approx(a.mean + c).epsilon(1e-12));
    CHECK(b.std == doctest::Approx(a.std).epsilon(1e-9));
    CHECK(a.std >= 0);
  }
}

TEST_CASE("aggregate over run records") {
  std::vector<RunRecord> runs;
  for (int s = 0; s < 5; ++s) {
    RunRecord r;
    r.run_id = "x_s" + std::to_string(s);
    r.seed = static_cast<std::uint64_t>(s);
    r.test_acc = 97.6 + 0.1 * s;
    r.energy_mJ_mean = 15.0;
    runs.push_back(r);
  }
  const MetricsReport rep = aggregate(runs);
  CHECK(rep.runs.size() == 5);
  CHECK(rep.at("test_acc").mean == doctest::Approx(97.8));
  CHECK(rep.at("test_acc").n == 5);
  CHECK(rep.at("energy_mJ_mean").std == 0.0);
  CHECK(rep.aggregates.size() == numeric_metric_names().size());
  CHECK_THROWS_AS(rep.at("nope"), ConfigError);
  CHECK_THROWS_AS(aggregate(std::vector<RunRecord>{}), ConfigError);
  CHECK(metric_value(runs[2], "test_acc") == runs[2].test_acc);
  CHECK_THROWS_AS(metric_value(runs[0], "bogus"), ConfigError);
}
