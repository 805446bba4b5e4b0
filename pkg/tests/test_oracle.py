import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation
from scipy.special import eval_legendre

from conftest import octahedral_group
from ddlpb.cases import kirkwood_charges
from ddlpb.errors import SeriesNotConverged
from ddlpb.oracle import KirkwoodProblem, born_energy_screened, kirkwood_energy, kirkwood_terms
from ddlpb.solver import C_ELEC
from reference_values import EXACT

CASES = ["born", "kirkwood1", "kirkwood2", "kirkwood3", "kirkwood4", "kirkwood5"]


def problem(name, **kw):
    pos, q = kirkwood_charges(name)
    return KirkwoodProblem(2.0, pos, q, **kw)


def loop_energy(R, pos, q, e1, e2, L):
    """Term-by-term double loop with scipy Legendre polynomials."""
    total = 0.0
    for i in range(len(q)):
        for j in range(len(q)):
            ri, rj = np.linalg.norm(pos[i]), np.linalg.norm(pos[j])
            c = 1.0 if ri * rj == 0 else np.dot(pos[i], pos[j]) / (ri * rj)
            for ell in range(L + 1):
                f = (e1 - e2) * (ell + 1) / (e1 * (ell * e1 + (ell + 1) * e2))
                total += (q[i] * q[j] * f * (ri * rj) ** ell / R ** (2 * ell + 1)
                          * eval_legendre(ell, np.clip(c, -1, 1)))
    return 0.5 * C_ELEC * total


@pytest.mark.parametrize("name", CASES)
def test_published_exact_values(name):
    assert abs(kirkwood_energy(problem(name)) / EXACT[name] - 1) < 5e-5


@pytest.mark.parametrize("name", CASES)
def test_matches_independent_loop(name):
    pos, q = kirkwood_charges(name)
    ref = loop_energy(2.0, pos, q, 1.0, 78.54, 100)
    assert kirkwood_energy(problem(name)) == pytest.approx(ref, rel=1e-12)


def test_born_case_equals_born_formula():
    assert kirkwood_energy(problem("born")) == pytest.approx(
        born_energy_screened(1.0, 2.0, 1.0, 78.54, 0.0), rel=1e-14)
    assert round(born_energy_screened(1.0, 2.0), 4) == -81.9589


def test_no_contrast_no_energy():
    assert kirkwood_energy(problem("kirkwood3", eps2=1.0)) == 0.0


def test_truncation_monotone():
    for name in CASES[1:]:
        full = kirkwood_terms(problem(name, series_terms=200))
        partial = np.cumsum(full)
        gaps = [abs(partial[L] - partial[L + 10]) for L in range(10, 150, 10)]
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("name", CASES)
def test_hundred_terms_stable(name):
    e100 = kirkwood_energy(problem(name, series_terms=100))
    e200 = kirkwood_energy(problem(name, series_terms=200))
    assert abs(e100 / e200 - 1) < 1e-10


def test_short_series_raises():
    with pytest.raises(SeriesNotConverged):
        kirkwood_energy(problem("kirkwood5", series_terms=5))
    e, last = kirkwood_energy(problem("kirkwood5"), return_error=True)
    assert last / abs(e) < 1e-12


def test_rejects_charge_on_or_outside_sphere():
    with pytest.raises(ValueError):
        KirkwoodProblem(2.0, [[2.0, 0, 0]], [1.0])
    with pytest.raises(ValueError):
        KirkwoodProblem(2.0, [[0, 0, 0]], [1.0, 2.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 47), st.permutations(range(6)))
def test_rotation_and_permutation_invariance(k, perm):
    pos, q = kirkwood_charges("kirkwood5")
    q = q * [1, -1, 0.5, 2, -0.3, 1]
    base = kirkwood_energy(KirkwoodProblem(2.0, pos, q))
    R = octahedral_group()[k]
    p = list(perm)
    moved = kirkwood_energy(KirkwoodProblem(2.0, pos[p] @ R.T, q[p]))
    assert moved == pytest.approx(base, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 5))
def test_arbitrary_rotation_single_pair(a, b, c, scale):
    pos = np.array([[0.5, 0.2, -0.3], [-0.4, 0.6, 0.1]])
    axis = np.array([a, b, c])
    if np.linalg.norm(axis) < 1e-3:
        return
    R = Rotation.from_rotvec(axis / np.linalg.norm(axis) * scale).as_matrix()
    e = kirkwood_energy(KirkwoodProblem(2.0, pos, [1.0, -0.5]))
    assert kirkwood_energy(KirkwoodProblem(2.0, pos @ R.T, [1.0, -0.5])) == \
        pytest.approx(e, rel=1e-12)


def test_screened_born_frozen_and_limits():
    e = born_energy_screened(1.0, 2.0, 1.0, 78.54, 0.104)
    assert e == pytest.approx(-82.14090927523327, rel=1e-14)
    conductor = -C_ELEC / (2 * 2.0)
    big = [born_energy_screened(1, 2, 1, 78.54, k) for k in (1, 10, 100, 1e6)]
    assert all(x > conductor for x in big)
    assert np.all(np.diff(big) < 0)
    assert abs(big[-1] / conductor - 1) < 1e-6
