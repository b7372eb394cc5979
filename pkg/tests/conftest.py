import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rnaseg.pipeline import PipelineConfig, train_model  # noqa: E402
from rnaseg.synth import SynthConfig, generate  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_patches():
    """Three small synthetic patches with truth, shared across tests."""
    return [generate(SynthConfig(seed=s, side=160, dots=12, nuclei=4)) for s in range(3)]


@pytest.fixture(scope="session")
def small_model(small_patches):
    imgs, truths = zip(*small_patches)
    return train_model(imgs, truths, PipelineConfig())
