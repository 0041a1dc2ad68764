import os
from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parents[1]
DATA = Path(os.environ.get("QUDITLEARN_DATA", REPO / "data"))


@pytest.fixture(scope="session")
def iris_path():
    p = DATA / "iris.csv"
    if not p.exists():
        pytest.skip("bundled iris.csv missing")
    return p


@pytest.fixture(scope="session")
def wdbc_path():
    p = DATA / "wdbc.csv"
    if not p.exists():
        pytest.skip("bundled wdbc.csv missing")
    return p


@pytest.fixture(scope="session")
def digits_path():
    p = DATA / "digits8x8.csv"
    if not p.exists():
        pytest.skip("bundled digits8x8.csv missing")
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def random_state(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
