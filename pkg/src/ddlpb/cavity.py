"""Union-of-balls cavities, point charges and per-node exposure geometry."""
from __future__ import annotations

import io
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .angular import AngularGrid
from .errors import EmptyStructure, ParseError

# a node closer than this to a sphere counts as lying on it, not inside
MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    charge: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 3 or not all(np.isfinite(c)):
            raise ValueError(f"ball center must be a finite 3-vector: {self.center}")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "charge", float(self.charge))


@dataclass(frozen=True, eq=False)
class PointCharges:
    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        val = np.asarray(self.values, dtype=float).reshape(-1)
        if pos.shape[0] != val.shape[0]:
            raise ValueError("one charge value per position is required")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    def __len__(self):
        return self.values.size

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros(0))

    def transformed(self, rotation=None, shift=None):
        pos = self.positions
        if rotation is not None:
            pos = pos @ np.asarray(rotation).T
        if shift is not None:
            pos = pos + np.asarray(shift)
        return PointCharges(pos, self.values.copy())


@dataclass(frozen=True, eq=False)
class Cavity:
    balls: tuple
    radius_scale: float = 1.0

    def __post_init__(self):
        balls = tuple(self.balls)
        if not balls:
            raise EmptyStructure("a cavity needs at least one ball")
        if not self.radius_scale > 0:
            raise ValueError("radius_scale must be positive")
        object.__setattr__(self, "balls", balls)

    @classmethod
    def from_arrays(cls, centers, radii, charges=None, radius_scale=1.0):
        centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        radii = np.broadcast_to(np.asarray(radii, dtype=float), centers.shape[:1])
        if charges is None:
            charges = np.zeros(len(radii))
        balls = [Ball(c, r, q) for c, r, q in zip(centers, radii, charges)]
        return cls(tuple(balls), radius_scale)

    def __len__(self):
        return len(self.balls)

    @property
    def centers(self):
        return np.array([b.center for b in self.balls])

    @property
    def radii(self):
        """Radii after ``radius_scale`` is applied."""
        return np.array([b.radius for b in self.balls]) * self.radius_scale

    def atom_charges(self):
        """One point charge per ball, at its center (the PQR charge model)."""
        return PointCharges(self.centers, [b.charge for b in self.balls])

    def scaled(self, factor):
        return Cavity(self.balls, self.radius_scale * factor)

    def transformed(self, rotation=None, shift=None):
        centers = self.centers
        if rotation is not None:
            centers = centers @ np.asarray(rotation).T
        if shift is not None:
            centers = centers + np.asarray(shift)
        balls = [Ball(c, b.radius, b.charge) for c, b in zip(centers, self.balls)]
        return Cavity(tuple(balls), self.radius_scale)


def parse_pqr(source) -> Cavity:
    """Read ATOM/HETATM records of a whitespace-separated PQR stream.

    ``source`` may be bytes, a text string, or a binary/text file object.
    The last five fields of each record are taken as x, y, z, charge and
    radius, so an optional chain-ID column is tolerated.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    balls = []
    for lineno, line in enumerate(io.StringIO(source), start=1):
        fields = line.split()
        if not fields or fields[0] not in ("ATOM", "HETATM"):
            continue
        if len(fields) < 10:
            raise ParseError(
                f"expected at least 10 fields in {fields[0]} record, got "
                f"{len(fields)}", lineno)
        try:
            x, y, z, q, r = (float(v) for v in fields[-5:])
        except ValueError as exc:
            raise ParseError(f"non-numeric coordinate/charge/radius ({exc})",
                             lineno) from None
        if not all(np.isfinite((x, y, z, q, r))):
            raise ParseError("non-finite value", lineno)
        if r <= 0:
            raise ParseError(f"atom radius must be positive, got {r}", lineno)
        balls.append(Ball((x, y, z), r, q))
    if not balls:
        raise EmptyStructure("no ATOM/HETATM records found")
    return Cavity(tuple(balls))


def read_pqr(path) -> Cavity:
    return parse_pqr(Path(path).read_bytes())


def format_pqr(cavity: Cavity, resname="MOL") -> str:
    lines = []
    for k, b in enumerate(cavity.balls, start=1):
        x, y, z = b.center
        lines.append(
            f"ATOM  {k:5d}  X{k:<3d}{resname:>4s}     1    "
            f"{x:12.6f}{y:12.6f}{z:12.6f} {b.charge:10.6f} {b.radius:9.5f}")
    lines.append("END")
    return "\n".join(lines) + "\n"


class SpatialHash:
    """Uniform grid of cubic cells for ball-overlap queries.

    With the cell edge at least the largest ball diameter, two overlapping
    balls always sit in the same or adjacent cells.
    """

    def __init__(self, centers, cell_size):
        self.centers = np.asarray(centers, dtype=float)
        self.cell_size = float(cell_size)
        self.keys = np.floor(self.centers / self.cell_size).astype(np.int64)
        self.cells = defaultdict(list)
        for idx, key in enumerate(map(tuple, self.keys)):
            self.cells[key].append(idx)

    def candidates(self, idx):
        kx, ky, kz = self.keys[idx]
        out = []
        for dx, dy, dz in itertools.product((-1, 0, 1), repeat=3):
            out.extend(self.cells.get((kx + dx, ky + dy, kz + dz), ()))
        return sorted(out)


def overlapping_balls(centers, radii):
    """For each ball, the sorted indices of other balls it intersects."""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    grid = SpatialHash(centers, 2.0 * radii.max())
    result = []
    for j in range(len(radii)):
        cand = np.array([i for i in grid.candidates(j) if i != j], dtype=np.int64)
        if cand.size:
            dist = np.linalg.norm(centers[cand] - centers[j], axis=1)
            cand = cand[dist < radii[cand] + radii[j]]
        result.append(cand)
    return result


@dataclass(frozen=True, eq=False)
class ExposureCache:
    """Geometry of every (ball, Lebedev node) pair.

    The coupling pairs are stored flat: pair ``k`` says that node
    ``pair_node[k]`` of ball ``pair_target[k]`` lies inside ball
    ``pair_source[k]`` at local spherical coordinates ``(pair_r[k],
    pair_s[k])`` and carries weight ``pair_weight[k]``.
    """

    centers: np.ndarray
    radii: np.ndarray
    grid: AngularGrid
    exposed: np.ndarray
    pair_target: np.ndarray
    pair_node: np.ndarray
    pair_source: np.ndarray
    pair_weight: np.ndarray
    pair_r: np.ndarray
    pair_s: np.ndarray
    overlaps: list = field(repr=False)

    @property
    def n_balls(self):
        return self.radii.size

    def node_positions(self):
        """Surface nodes x_j + r_j s_n, shape (M, N, 3)."""
        return self.centers[:, None, :] + self.radii[:, None, None] * self.grid.points

    def exposed_indices(self):
        """(ball, node) index arrays of all exposed nodes, in row-major order."""
        return np.nonzero(self.exposed)

    def n_neighbors(self):
        counts = np.zeros(self.exposed.shape, dtype=np.int64)
        np.add.at(counts, (self.pair_target, self.pair_node), 1)
        return counts

    def neighbors(self, j, n):
        sel = np.nonzero((self.pair_target == j) & (self.pair_node == n))[0]
        return [(int(self.pair_source[k]), float(self.pair_weight[k]),
                 float(self.pair_r[k]), self.pair_s[k].copy()) for k in sel]

    def weight_sums(self):
        sums = np.zeros(self.exposed.shape)
        np.add.at(sums, (self.pair_target, self.pair_node), self.pair_weight)
        return sums


def build_exposure(cavity: Cavity, grid: AngularGrid) -> ExposureCache:
    centers, radii = cavity.centers, cavity.radii
    M, N = radii.size, grid.size
    overlaps = overlapping_balls(centers, radii)
    nodes = centers[:, None, :] + radii[:, None, None] * grid.points

    targets, node_idx, sources, dists, dirs = [], [], [], [], []
    for j in range(M):
        for i in overlaps[j]:
            d = nodes[j] - centers[i]
            r = np.linalg.norm(d, axis=1)
            inside = np.nonzero(r < radii[i] - MEMBERSHIP_TOL)[0]
            if inside.size == 0:
                continue
            targets.append(np.full(inside.size, j))
            node_idx.append(inside)
            sources.append(np.full(inside.size, i))
            dists.append(np.where(r[inside] < MEMBERSHIP_TOL, 0.0, r[inside]))
            # a node at the very center of ball i: only the l=0 mode is
            # nonzero there, so any unit direction will do
            dd, rr = d[inside], r[inside]
            at_center = rr < MEMBERSHIP_TOL
            dd[at_center] = (0.0, 0.0, 1.0)
            rr_safe = np.where(at_center, 1.0, rr)
            dirs.append(dd / rr_safe[:, None])

    if targets:
        t = np.concatenate(targets).astype(np.int64)
        n = np.concatenate(node_idx).astype(np.int64)
        i = np.concatenate(sources).astype(np.int64)
        r = np.concatenate(dists)
        s = np.concatenate(dirs)
        # deterministic order: target ball, node, source ball
        order = np.lexsort((i, n, t))
        t, n, i, r, s = t[order], n[order], i[order], r[order], s[order]
    else:
        t = n = i = np.zeros(0, dtype=np.int64)
        r = np.zeros(0)
        s = np.zeros((0, 3))

    counts = np.zeros((M, N), dtype=np.int64)
    np.add.at(counts, (t, n), 1)
    exposed = counts == 0
    weight = 1.0 / counts[t, n] if t.size else np.zeros(0)
    for arr in (exposed, t, n, i, r, s, weight):
        arr.setflags(write=False)
    return ExposureCache(centers, radii, grid, exposed, t, n, i, weight, r, s,
                         overlaps)
