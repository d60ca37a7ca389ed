import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wvc._accel import HAVE_NUMBA  # noqa: E402

BACKENDS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    monkeypatch.setenv("WVC_BACKEND", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def texture_model():
    """Small trained model shared by classifier, model-file and CLI tests."""
    from wvc.pipeline import fit
    from wvc.synth import texture_corpus

    images, labels = texture_corpus(4, 64, seed=3)
    counts = {4: 20, 8: 20}
    model, report = fit(images, labels, counts=counts, select_k=30, seed=5)
    return model, report, images, labels


def pytest_report_header(config):
    return f"wvc backend: {os.environ.get('WVC_BACKEND', 'numba')} (numba available: {HAVE_NUMBA})"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
