"""Closed-form reference energies: Kirkwood multipole series and screened Born."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SeriesNotConverged
from .solver import C_ELEC

SERIES_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KirkwoodProblem:
    """Point charges inside one dielectric sphere centered at the origin."""

    radius: float
    positions: np.ndarray
    charges: np.ndarray
    eps1: float = 1.0
    eps2: float = 78.54
    series_terms: int = 100

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        q = np.asarray(self.charges, dtype=float).reshape(-1)
        if pos.shape[0] != q.size:
            raise ValueError("one charge per position is required")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.series_terms < 0:
            raise ValueError("series_terms must be >= 0")
        if q.size and np.linalg.norm(pos, axis=1).max() >= self.radius:
            raise ValueError("every charge must lie strictly inside the sphere")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "charges", q)


def _legendre_table(lmax, x):
    """P_0..P_lmax at x via the three-term recurrence."""
    out = np.empty((lmax + 1,) + np.shape(x))
    out[0] = 1.0
    if lmax >= 1:
        out[1] = x
    for ell in range(1, lmax):
        out[ell + 1] = ((2 * ell + 1) * x * out[ell] - ell * out[ell - 1]) / (ell + 1)
    return out


def kirkwood_terms(p: KirkwoodProblem):
    """Per-degree contributions (kcal/mol) of the reaction-field energy."""
    L = p.series_terms
    e1, e2, R = p.eps1, p.eps2, p.radius
    r = np.linalg.norm(p.positions, axis=1)
    dot = p.positions @ p.positions.T
    rr = np.outer(r, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosg = np.where(rr > 0, dot / np.where(rr > 0, rr, 1.0), 1.0)
    cosg = np.clip(cosg, -1.0, 1.0)
    leg = _legendre_table(L, cosg)
    qq = np.outer(p.charges, p.charges)
    ell = np.arange(L + 1)
    factor = (e1 - e2) * (ell + 1) / (e1 * (ell * e1 + (ell + 1) * e2))
    # (r_i r_j)^l / R^(2l+1) = (r_i r_j / R^2)^l / R ; 0^0 = 1
    radial = (rr[None] / R**2) ** ell[:, None, None] / R
    terms = factor * np.einsum("ij,lij,lij->l", qq, radial, leg)
    return 0.5 * C_ELEC * terms


def kirkwood_energy(p: KirkwoodProblem, return_error=False):
    """Solvation energy of charges in a sphere, kappa = 0.

    With ``return_error`` the magnitude of the last retained term is
    returned alongside, as a truncation estimate.
    """
    terms = kirkwood_terms(p)
    energy = float(terms.sum())
    last = abs(terms[-1])
    if energy != 0.0 and last / abs(energy) > SERIES_TOL:
        raise SeriesNotConverged(
            f"last series term is {last / abs(energy):.2e} of the total at "
            f"L={p.series_terms}")
    return (energy, last) if return_error else energy


def born_energy_screened(q, radius, eps1=1.0, eps2=78.54, kappa=0.0):
    """Centered charge in a sphere surrounded by a screened solvent."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    return C_ELEC * q * q / (2.0 * radius) * (
        1.0 / (eps2 * (1.0 + kappa * radius)) - 1.0 / eps1)
