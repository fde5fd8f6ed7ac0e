from pathlib import Path

import numpy as np
import pytest

from covbal.data import build_dataset
from covbal import simulate

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def make_d4():
    return build_dataset([0, 0, 1, 1], [0, 1, 0, 1], [1, 2, 3, 5], names=("x",))


@pytest.fixture
def d4():
    return make_d4()


@pytest.fixture(scope="session")
def s1():
    return simulate.generate(simulate.S1)


@pytest.fixture(scope="session")
def s2():
    return simulate.generate(simulate.S2)


@pytest.fixture(scope="session")
def family():
    return [simulate.generate(simulate.family_spec(s)) for s in range(1, 21)]


def binary_covariate_dataset(seed, n=60):
    """K = 2 design with one binary covariate; every stratum has both arms."""
    rng = np.random.default_rng(seed)
    while True:
        x = rng.integers(0, 2, n)
        p = np.where(x == 1, 0.7, 0.35)
        w = (rng.uniform(size=n) < p).astype(int)
        ok = all(0 < w[x == s].sum() < (x == s).sum() for s in (0, 1))
        if ok:
            return build_dataset(x, w, rng.normal(size=n) + 2 * w + x)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
