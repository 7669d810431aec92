"""Shared fixtures."""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root to path so the src package resolves
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.channel import GadParams  # noqa: E402
from src.codes import build_code  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def five_qubit():
    return build_code("five_qubit")


@pytest.fixture(scope="session")
def leung_four():
    return build_code("leung_four")


@pytest.fixture(scope="session")
def css_seven():
    return build_code("css_seven")


@pytest.fixture
def gad_point():
    """A generic low-temperature channel point."""
    return GadParams(0.05, 0.005)


@pytest.fixture
def output_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
