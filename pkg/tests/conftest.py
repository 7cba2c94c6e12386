import time

import numpy as np
import pytest

from langgoal import corpus, goalgen

ACCEPTANCE_SEEDS = (0, 1, 2)
_results = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run multi-seed studies (~15 min)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_results):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(number, ok, detail):
        _results.append((number, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


class TrainedRun:
    def __init__(self, seed):
        self.seed = seed
        self.dataset = corpus.generate_dataset(5000, np.random.default_rng(seed))
        self.splits = corpus.build_splits(self.dataset)
        start = time.perf_counter()
        self.model, self.history = goalgen.train(self.splits.train, goalgen.Hyperparams(seed=seed))
        self.train_seconds = time.perf_counter() - start


_trained = {}


def trained_run(seed) -> TrainedRun:
    if seed not in _trained:
        _trained[seed] = TrainedRun(seed)
    return _trained[seed]


@pytest.fixture(scope="session")
def trained_runs():
    """Full-size models for the acceptance seeds (about 80 s each)."""
    return [trained_run(s) for s in ACCEPTANCE_SEEDS]


@pytest.fixture(scope="session")
def trained():
    return trained_run(ACCEPTANCE_SEEDS[0])


@pytest.fixture(scope="session")
def tiny_model():
    """Quickly trained model for plumbing tests; not good enough for metrics."""
    data = corpus.generate_dataset(600, np.random.default_rng(7))
    model, _ = goalgen.train(data, goalgen.Hyperparams(seed=7, epochs=3, hidden=32, latent=8, embed=16))
    return model
