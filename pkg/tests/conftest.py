import itertools

import numpy as np
import pytest

from ddlpb.cavity import Cavity


def random_cavity(rng, n_balls, spread=1.5, rmin=1.0, rmax=1.8):
    """Loosely packed overlapping balls with random charges at the centers."""
    centers = rng.normal(scale=spread, size=(n_balls, 3))
    radii = rng.uniform(rmin, rmax, n_balls)
    charges = rng.uniform(-1, 1, n_balls)
    return Cavity.from_arrays(centers, radii, charges)


def octahedral_group():
    """The 48 signed permutation matrices (symmetries of every Lebedev grid)."""
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3))
            m[range(3), perm] = signs
            mats.append(m)
    return mats


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from _acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
