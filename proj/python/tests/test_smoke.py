import json
import math
import pathlib

import numpy as np
import pytest

import snnbench

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_lif_decay_matches_beta_powers():
    p = snnbench.LifParams()
    traj = snnbench.lif_decay_trajectory(0.9, 10, p)
    beta = math.exp(-1.0 / 20.0)
    assert p.beta() == pytest.approx(beta, rel=1e-15)
    for k, v in enumerate(traj, start=1):
        assert v == pytest.approx(0.9 * beta**k, rel=1e-12)


def test_lif_step_fires_and_goes_refractory():
    p = snnbench.LifParams()
    v, refrac, spikes = snnbench.lif_step([0.99, 0.0], [0, 0], [50.0, 0.0], p)
    assert spikes == [1, 0]
    assert v[0] == p.v_reset
    assert refrac[0] == p.refrac_steps() == 5


def test_rate_encoding_is_seeded_and_bounded():
    x = np.linspace(0.0, 1.0, 16)
    a = snnbench.encode_rate(x, window_ms=100, seed=3)
    b = snnbench.encode_rate(x, window_ms=100, seed=3)
    c = snnbench.encode_rate(x, window_ms=100, seed=4)
    assert a.shape == (100, 16) and a.dtype == np.uint8
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a[:, 0].sum() == 0
    # Full intensity fires with p = 0.2 per 1 ms step.
    full = snnbench.encode_rate(np.ones(200), window_ms=100, seed=5)
    assert abs(full.mean() - 0.2) < 0.01


def _relay_net(gain):
    return {
        "layer_sizes": [2, 2],
        "weights": [[gain, 0.0, 0.0, gain]],
        "lif": {"tau_mem": 20.0, "v_th": 1.0, "v_reset": 0.0, "v_rest": 0.0, "t_refrac": 5.0, "dt": 1.0},
    }


def test_simulate_counts_spikes_and_synops():
    net = _relay_net(100.0)
    spikes = np.zeros((10, 2), dtype=np.uint8)
    spikes[0, 0] = 1
    spikes[7, 0] = 1
    spikes[3, 1] = 1
    tr = snnbench.simulate(net, spikes, 10)
    assert tr["spikes_per_layer"][0] == 3
    assert tr["synops"] == [3 * 2]
    # One-step delay: unit 0 fires at 1 and 8, unit 1 at 4.
    assert tr["output_counts"] == [2, 1]
    assert tr["output_first_spike"] == [1, 4]
    out = tr["layers"][1]
    assert out.shape == (10, 2)
    assert out[1, 0] == 1 and out[8, 0] == 1 and out[4, 1] == 1


def test_network_documents_are_validated():
    net = _relay_net(1.0)
    net["weights"] = [[1.0, 2.0]]
    with pytest.raises(snnbench.Error):
        snnbench.simulate(net, np.zeros((5, 2), dtype=np.uint8), 5)


def test_metric_kernels():
    assert snnbench.accuracy(97, 100) == 97.0
    with pytest.raises(snnbench.ConfigError):
        snnbench.accuracy(1, 0)
    e = snnbench.energy_mj(1000, 200000, e_spike=1e-3, e_synapse=2.5e-7)
    assert e == pytest.approx(1.05, rel=1e-12)
    assert snnbench.energy_efficiency(95.0, e) == pytest.approx(95.0 / 1.05)
    assert snnbench.convergence_epoch([80, 90, 96, 97], 95.0) == 3
    assert snnbench.convergence_epoch([1.0, 0.6, 0.4], 0.5, at_most=True) == 3
    assert snnbench.convergence_epoch([80, 90], 95.0) is None


def test_stdp_and_surrogate_kernels():
    assert snnbench.stdp_pair_update(10.0, a_plus=0.01, tau_plus=20.0) == pytest.approx(0.01 * math.exp(-0.5))
    assert snnbench.stdp_pair_update(-10.0, a_minus=0.012, tau_minus=20.0) == pytest.approx(-0.012 * math.exp(-0.5))
    assert snnbench.stdp_pair_update(0.0) == 0.0
    assert snnbench.surrogate_derivative(0.0) == 1.0
    assert snnbench.surrogate_derivative(0.1, "fast_sigmoid", 10.0) == pytest.approx(0.25)
    with pytest.raises(snnbench.ConfigError):
        snnbench.surrogate_derivative(0.0, "tanh", 1.0)


def test_config_loading_and_validation():
    cfg = snnbench.load_config(CONFIGS / "synthetic_quick.json")
    assert cfg["name"] == "synthetic_quick"
    assert cfg["seeds"] == [1, 2]
    with pytest.raises(snnbench.ConfigError):
        snnbench.normalize_config(json.dumps({"name": "x", "bogus": 1}))


def test_quick_experiment_is_reproducible():
    cfg = snnbench.load_config(CONFIGS / "synthetic_quick.json")
    cfg["seeds"] = [1]
    cfg["surrogate"]["epochs"] = 3
    rows_a, failures = snnbench.run_experiment(cfg)
    rows_b, _ = snnbench.run_experiment(json.dumps(cfg))
    assert failures == []
    assert len(rows_a) == 3
    assert [r["test_acc"] for r in rows_a] == [r["test_acc"] for r in rows_b]
    assert rows_a[-1]["model"] == "surrogate_snn"
    assert 0.0 <= rows_a[-1]["test_acc"] <= 100.0
