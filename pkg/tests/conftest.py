import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # makes `import oracles` work

import _scorecard

from coocnet import imaging
from coocnet.harness import build_manifest


def pytest_terminal_summary(terminalreporter):
    if _scorecard.LINES:
        terminalreporter.section("acceptance criteria")
        for line in _scorecard.LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def synth_tree(tmp_path_factory):
    """Small labeled image tree shared by read-only tests: 12 images per
    class at 64x64."""
    root = tmp_path_factory.mktemp("synthdata")
    imaging.synth_dataset(root, count=12, size=(64, 64), seed=77)
    return root


@pytest.fixture(scope="session")
def synth_manifest(synth_tree):
    return build_manifest(str(synth_tree))


def random_rgb(rng, h=16, w=16):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
