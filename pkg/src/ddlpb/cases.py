"""Built-in benchmark geometries (Kirkwood spheres and formaldehyde)."""
from __future__ import annotations

import numpy as np

from .cavity import Cavity, PointCharges

KIRKWOOD_RADIUS = 2.0

_KIRKWOOD = {
    "born": ([[0, 0, 0]], [1]),
    "kirkwood1": ([[1, 0, 0], [-1, 0, 0]], [1, 1]),
    "kirkwood2": ([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]], [1, 1, -1, -1]),
    "kirkwood3": ([[1.2, 0, 0], [-1.2, 0, 0], [0, 1.2, 0], [0, -1.2, 0]],
                  [1, 1, -1, -1]),
    "kirkwood4": ([[0.4, 0, 0], [0, 0.8, 0], [0, 0, 1.2], [0, 0, -0.4],
                   [-0.8, 0, 0], [0, -1.2, 0]], [1] * 6),
    "kirkwood5": ([[0.2, 0.2, 0.2], [0.5, 0.5, 0.5], [0.8, 0.8, 0.8],
                   [-0.2, 0.2, -0.2], [0.5, -0.5, 0.5], [-0.8, -0.8, -0.8]],
                  [1] * 6),
}

# charge, x, y, z, radius
FORMALDEHYDE = np.array([
    [0.08130, 0.0, 0.0, -0.6175, 2.11805],
    [-0.20542, 0.0, 0.0, 0.7525, 1.925],
    [0.06206, 0.0, 0.935, -1.1575, 1.5873],
    [0.06206, 0.0, -0.935, -1.1575, 1.5873],
])

CASE_NAMES = tuple(_KIRKWOOD) + ("formaldehyde",)


def kirkwood_charges(name):
    pos, q = _KIRKWOOD[name]
    return np.array(pos, dtype=float), np.array(q, dtype=float)


def builtin_case(name):
    """Return ``(cavity, charges)`` for a built-in case name."""
    if name == "formaldehyde":
        a = FORMALDEHYDE
        cav = Cavity.from_arrays(a[:, 1:4], a[:, 4], a[:, 0])
        return cav, cav.atom_charges()
    if name not in _KIRKWOOD:
        raise KeyError(f"unknown case {name!r}; choose one of {', '.join(CASE_NAMES)}")
    pos, q = kirkwood_charges(name)
    cav = Cavity.from_arrays([[0.0, 0.0, 0.0]], KIRKWOOD_RADIUS)
    return cav, PointCharges(pos, q)
