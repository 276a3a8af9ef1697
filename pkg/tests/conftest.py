import os
import time
from pathlib import Path

import numpy as np
import pytest

from ddigraph.model import ModelConfig, init_params

DATA = Path(__file__).parent / "data"


def small_config(**kw):
    base = dict(gcn_layers=2, gcn_units=4, fc_layers=1, fc_units=5, max_nodes=8)
    base.update(kw)
    return ModelConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_params():
    return init_params(small_config(), np.random.default_rng(3))


@pytest.fixture(scope="session")
def toy_model():
    """Model trained on the planted-motif toy set, pinned to one CPU core.

    Returns ``(data, params, history, seconds)``.
    """
    from ddigraph.toy import motif_pairs
    from ddigraph.train import TrainConfig, train

    data = motif_pairs(50, seed=0)
    config = TrainConfig(epochs=1, steps_per_epoch=300, batch_size=16, seed=0)
    pinned = hasattr(os, "sched_setaffinity")
    if pinned:
        cores = os.sched_getaffinity(0)
        os.sched_setaffinity(0, {min(cores)})
    try:
        start = time.perf_counter()
        params, history = train(data, config)
        seconds = time.perf_counter() - start
    finally:
        if pinned:
            os.sched_setaffinity(0, cores)
    return data, params, history, seconds


# ------------------------------------------------------------ acceptance report

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """``criterion(name, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""

    def record(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
