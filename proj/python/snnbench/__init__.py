"""Spiking neural network engine and benchmark harness."""

import json

from ._core import (
    CalibrationError,
    ConfigError,
    DimensionError,
    DivergenceError,
    Error,
    FormatError,
    LifParams,
    NumericError,
    accuracy,
    convergence_epoch,
    encode_rate,
    energy_efficiency,
    energy_mj,
    lif_decay_trajectory,
    lif_step,
    normalize_config,
    stdp_pair_update,
    surrogate_derivative,
    write_report,
)
from . import _core


def _as_text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def simulate(network, spikes, window):
    """Run a network document (dict or JSON text) on a (steps, units) raster."""
    return _core.simulate(_as_text(network), spikes, window)


def simulate_analog(network, current, window):
    """Run a network document driven by a constant input current."""
    return _core.simulate_analog(_as_text(network), current, window)


def load_config(path):
    """Read, validate and default-complete a config file."""
    with open(path) as f:
        return json.loads(normalize_config(f.read()))


def run_experiment(config, data_dir="", write_outputs=False):
    """Run a config (dict or JSON text); returns (rows, failures)."""
    return _core.run_experiment(_as_text(config), data_dir, write_outputs)


__version__ = "0.1.0"
