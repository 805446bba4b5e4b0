"""Lebedev grids on the unit sphere and the real orthonormal harmonic basis.

Harmonics are fully normalized real functions without the Condon-Shortley
phase::

    Y_l^0  = N_l^0 P_l(cos t)
    Y_l^m  = sqrt(2) N_l^m P_l^m(cos t) cos(m p)      m > 0
    Y_l^-m = sqrt(2) N_l^m P_l^m(cos t) sin(m p)      m > 0

and are stored at the packed index ``p = l*(l+1) + m``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import lebedev_rule

from .errors import LengthMismatch, NonUnitDirection, UnsupportedGridSize

# number of nodes -> polynomial degree integrated exactly
LEBEDEV_ORDERS = {
    6: 3, 14: 5, 26: 7, 38: 9, 50: 11, 74: 13, 86: 15, 110: 17, 146: 19,
    170: 21, 194: 23, 230: 25, 266: 27, 302: 29, 350: 31, 434: 35, 590: 41,
    770: 47, 974: 53, 1202: 59, 1454: 65, 1730: 71, 2030: 77, 2354: 83,
    2702: 89, 3074: 95, 3470: 101, 3890: 107, 4334: 113, 4802: 119,
    5294: 125, 5810: 131,
}

# (lmax, n_leb) pairs used for the Kirkwood benchmark table
PRESETS = ((3, 26), (5, 50), (7, 86), (9, 146), (11, 194))

UNIT_TOL = 1e-12


def nbasis(lmax: int) -> int:
    return (lmax + 1) ** 2


def packed_index(ell: int, m: int) -> int:
    if abs(m) > ell:
        raise ValueError(f"|m| must not exceed l, got l={ell}, m={m}")
    return ell * (ell + 1) + m


def unpack_index(p: int) -> tuple[int, int]:
    ell = int(np.floor(np.sqrt(p)))
    return ell, p - ell * (ell + 1)


@lru_cache(maxsize=None)
def degrees(lmax: int) -> np.ndarray:
    """Degree l of every packed basis index, as a read-only array."""
    ell = np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])
    ell.setflags(write=False)
    return ell


@dataclass(frozen=True, eq=False)
class AngularGrid:
    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def size(self) -> int:
        return self.weights.size

    def integrate(self, values):
        return np.asarray(values) @ self.weights


def lebedev_grid(n_points: int) -> AngularGrid:
    """Lebedev rule with ``n_points`` nodes; weights sum to 4*pi."""
    return _lebedev_grid(int(n_points))


@lru_cache(maxsize=None)
def _lebedev_grid(n_points):
    if n_points not in LEBEDEV_ORDERS:
        raise UnsupportedGridSize(
            f"{n_points} is not a supported Lebedev size; choose one of "
            f"{sorted(LEBEDEV_ORDERS)}")
    order = LEBEDEV_ORDERS[n_points]
    xyz, w = lebedev_rule(order)
    points = np.ascontiguousarray(xyz.T)
    # the tables carry ~1e-16 radial noise; project back onto the sphere
    points /= np.linalg.norm(points, axis=1)[:, None]
    weights = np.ascontiguousarray(w)
    points.setflags(write=False)
    weights.setflags(write=False)
    return AngularGrid(points, weights, order)


def supported_sizes():
    return sorted(LEBEDEV_ORDERS)


def _harmonics(lmax, s):
    """Real harmonics for an (n, 3) array of unit vectors -> (n, nbasis)."""
    x, y, z = s[:, 0], s[:, 1], s[:, 2]
    n = s.shape[0]
    out = np.empty((n, nbasis(lmax)))
    # qmm holds N_m^m P_m^m / sin^m t; the sin^m t factor is carried by
    # the real and imaginary parts of (x + iy)^m
    qmm = np.full(n, 1.0 / np.sqrt(4.0 * np.pi))
    cm, sm = np.ones(n), np.zeros(n)
    for m in range(lmax + 1):
        if m > 0:
            qmm = qmm * np.sqrt((2.0 * m + 1.0) / (2.0 * m))
            cm, sm = cm * x - sm * y, sm * x + cm * y
        if m == 0:
            ang_c, ang_s = 1.0, None
        else:
            ang_c, ang_s = np.sqrt(2.0) * cm, np.sqrt(2.0) * sm
        q_prev2, q_prev = None, qmm
        for ell in range(m, lmax + 1):
            if ell == m + 1:
                q = np.sqrt(2.0 * m + 3.0) * z * qmm
            elif ell >= m + 2:
                a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
                b = np.sqrt(((ell - 1.0) ** 2 - m * m)
                            / (4.0 * (ell - 1.0) ** 2 - 1.0))
                q = a * (z * q_prev - b * q_prev2)
            else:
                q = qmm
            if ell > m:
                q_prev2, q_prev = q_prev, q
            base = ell * (ell + 1)
            out[:, base + m] = q * ang_c
            if m > 0:
                out[:, base - m] = q * ang_s
    return out


def eval_harmonics(lmax: int, s) -> np.ndarray:
    """All real harmonics up to degree ``lmax`` at direction(s) ``s``.

    ``s`` may be a single 3-vector (returns shape ``(nbasis,)``) or an array
    of shape ``(n, 3)`` (returns ``(n, nbasis)``).
    """
    if lmax < 0:
        raise ValueError("lmax must be non-negative")
    arr = np.asarray(s, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[-1] != 3:
        raise LengthMismatch(f"directions must be 3-vectors, got {arr.shape}")
    dev = np.abs(np.linalg.norm(pts, axis=1) - 1.0)
    if dev.size and dev.max() > UNIT_TOL:
        raise NonUnitDirection(
            f"direction norm deviates from 1 by {dev.max():.3e}")
    out = _harmonics(lmax, pts)
    return out[0] if single else out


@lru_cache(maxsize=64)
def grid_harmonics(lmax: int, n_points: int) -> np.ndarray:
    """Cached ``(n_points, nbasis)`` table of harmonics at the grid nodes."""
    table = _harmonics(lmax, lebedev_grid(n_points).points)
    table.setflags(write=False)
    return table


def project_onto_basis(values_at_nodes, grid: AngularGrid, lmax: int):
    """Discrete projection sum_n w_n f(s_n) Y_l^m(s_n).

    A leading batch axis is allowed: ``values_at_nodes`` of shape
    ``(..., N)`` maps to ``(..., nbasis)``.
    """
    vals = np.asarray(values_at_nodes, dtype=float)
    if vals.shape[-1] != grid.size:
        raise LengthMismatch(
            f"expected {grid.size} nodal values, got {vals.shape[-1]}")
    table = grid_harmonics(lmax, grid.size)
    return (vals * grid.weights) @ table
