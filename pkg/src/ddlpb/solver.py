"""Outer Schwarz iteration, global GMRES mode and the solvation energy."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .angular import LEBEDEV_ORDERS, eval_harmonics, nbasis
from .cavity import Cavity, PointCharges
from .errors import (ChargeOutsideCavity, DDLPBError, NoConvergence, NoExposedSurface,
                     UnsupportedGridSize)
from .operators import DiscreteOperators, HarmonicCoeffs, SolventParams

log = logging.getLogger(__name__)

# kcal/mol per e^2/Angstrom
C_ELEC = 332.0636


@dataclass(frozen=True)
class SolveConfig:
    lmax: int = 7
    n_leb: int = 86
    tol: float = 1e-4
    gmres_tol: float = 1e-8
    gmres_restart: int = 30
    max_outer: int = 200
    mode: str = "outer"
    deterministic: bool = False

    def __post_init__(self):
        if self.mode not in ("outer", "global"):
            raise ValueError(f"mode must be 'outer' or 'global', got {self.mode!r}")
        if self.lmax < 0:
            raise ValueError("lmax must be non-negative")
        if not (0 < self.tol < 1 and 0 < self.gmres_tol < 1):
            raise ValueError("tolerances must lie in (0, 1)")
        if self.n_leb not in LEBEDEV_ORDERS:
            raise UnsupportedGridSize(
                f"{self.n_leb} is not a supported Lebedev size; choose one of "
                f"{sorted(LEBEDEV_ORDERS)}")


@dataclass
class SolveReport:
    energy: float
    X_r: HarmonicCoeffs
    X_e: HarmonicCoeffs
    outer_iterations: int
    increments: list
    energy_history: list
    inner_iterations: list
    residual: float
    seconds: float
    memory_bytes: int
    config: SolveConfig
    operators: DiscreteOperators = field(repr=False, default=None)


def initial_guess_g0(ops: DiscreteOperators):
    """Screened Coulomb potential of the charges at the exposed nodes."""
    q = ops.charges
    eps2, kappa = ops.params.eps2, ops.params.kappa
    if len(q) == 0:
        return np.zeros(ops.target_ball.size)
    d = np.linalg.norm(ops.target_points[:, None, :] - q.positions[None], axis=2)
    return (q.values * np.exp(-kappa * d) / (eps2 * d)).sum(axis=1)


def _gmres(matvec, rhs, x0, size, rtol, restart, maxiter=None):
    """Restarted GMRES; returns (solution, iterations, relative residual)."""
    if not np.any(rhs):
        return np.zeros(size), 0, 0.0
    op = LinearOperator((size, size), matvec=matvec, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = gmres(op, rhs, x0=x0, rtol=rtol, atol=0.0, restart=restart,
                    maxiter=maxiter, callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(rhs - matvec(x)) / np.linalg.norm(rhs))
    if info != 0:
        raise NoConvergence(
            f"GMRES stopped after {count[0]} iterations at relative residual "
            f"{res:.2e} (rtol={rtol:g})", [res])
    return x, count[0], res


def reaction_potential_at(ops: DiscreteOperators, X_r, points):
    """Evaluate psi_r from the expansion of the ball that contains each point.

    Among the balls containing a point, the one where it sits deepest
    (smallest |x - x_i| / r_i) is used.
    """
    X = np.asarray(X_r).reshape(ops.M, ops.nb)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rel = np.linalg.norm(pts[:, None, :] - ops.centers[None], axis=2) / ops.radii
    best = np.argmin(rel, axis=1)
    out = np.empty(pts.shape[0])
    for k, (p, i) in enumerate(zip(pts, best)):
        if rel[k, i] > 1.0:
            raise ChargeOutsideCavity(f"point {p} lies outside every ball")
        d = p - ops.centers[i]
        r = np.linalg.norm(d)
        if r < 1e-14:
            out[k] = X[i, 0] / np.sqrt(4.0 * np.pi)
            continue
        y = eval_harmonics(ops.lmax, d / r)
        out[k] = np.sum((r / ops.radii[i]) ** ops.deg * y * X[i])
    return out


def solvation_energy(ops: DiscreteOperators, X_r):
    q = ops.charges
    if len(q) == 0:
        return 0.0
    psi = reaction_potential_at(ops, X_r, q.positions)
    return 0.5 * C_ELEC * float(np.dot(q.values, psi))


def _solve_outer(ops, cfg):
    size = ops.size
    G0 = ops.rhs_G0()
    F0 = ops.rhs_F0()
    X_r = np.zeros(size)
    X_e = np.zeros(size)
    matA = lambda v: ops.apply_A(v)
    matB = lambda v: ops.apply_B(v)
    energies, increments, inner = [], [], []
    e_prev = None
    for k in range(1, cfg.max_outer + 1):
        if k == 1:
            gx = ops.project_exposed(initial_guess_g0(ops))
        else:
            c1, c2 = ops.apply_C(X_r.reshape(F0.shape), X_e.reshape(F0.shape))
            gx = F0 - c1 - c2
        X_r, it_r, res_r = _gmres(matA, (gx + G0).ravel(), X_r, size,
                                  cfg.gmres_tol, cfg.gmres_restart)
        X_e, it_e, res_e = _gmres(matB, gx.ravel(), X_e, size, cfg.gmres_tol,
                                  cfg.gmres_restart)
        inner.append((it_r, it_e))
        residual = max(res_r, res_e)
        energy = solvation_energy(ops, X_r)
        energies.append(energy)
        if e_prev is not None:
            diff = abs(energy - e_prev)
            inc = diff / abs(energy) if abs(energy) > 1e-12 else diff
            increments.append(inc)
            log.debug("outer %d: E=%.8f inc=%.3e", k, energy, inc)
            if inc < cfg.tol:
                return X_r, X_e, k, increments, energies, inner, residual
        e_prev = energy
    raise NoConvergence(
        f"outer iteration did not reach tol={cfg.tol} in {cfg.max_outer} "
        "iterations", energies)


def _solve_global(ops, cfg):
    size = ops.size
    rhs = ops.rhs_global()
    x, its, res = _gmres(ops.apply_global, rhs, None, 2 * size, cfg.gmres_tol,
                         cfg.gmres_restart, maxiter=cfg.max_outer * 10)
    X_r, X_e = x[:size], x[size:]
    energy = solvation_energy(ops, X_r)
    return X_r, X_e, 1, [], [energy], [its], res


def solve(cavity: Cavity, charges: PointCharges | None = None,
          params: SolventParams | None = None, config: SolveConfig | None = None,
          operators: DiscreteOperators | None = None) -> SolveReport:
    """Solve for the reaction potential and return the solvation energy.

    ``charges`` defaults to one point charge per ball from the PQR charges.
    A prebuilt ``operators`` object may be passed to reuse its caches.
    """
    cfg = config or SolveConfig()
    params = params or SolventParams()
    if charges is None:
        charges = cavity.atom_charges()
    t0 = time.perf_counter()
    ops = operators or DiscreteOperators(cavity, charges, params, cfg.lmax,
                                         cfg.n_leb, deterministic=cfg.deterministic)
    if ops.target_ball.size == 0:
        raise NoExposedSurface("no Lebedev node lies on the cavity boundary")
    solver = _solve_outer if cfg.mode == "outer" else _solve_global
    X_r, X_e, k, incs, energies, inner, residual = solver(ops, cfg)
    shape = (ops.M, nbasis(cfg.lmax))
    return SolveReport(
        energy=energies[-1],
        X_r=HarmonicCoeffs(X_r.reshape(shape), "reaction"),
        X_e=HarmonicCoeffs(X_e.reshape(shape), "extended"),
        outer_iterations=k, increments=incs, energy_history=energies,
        inner_iterations=inner, residual=residual,
        seconds=time.perf_counter() - t0, memory_bytes=ops.memory_bytes(),
        config=cfg, operators=ops)


@dataclass
class SweepRow:
    lmax: int
    nleb: int
    energy: float
    iterations: int
    seconds: float
    error: str | None = None


def convergence_sweep(cavity, charges=None, params=None, lmax_list=(3,),
                      nleb_list=(26,), **config_kw):
    """Solve once per (lmax, nleb) pair, in input order.

    A single ``nleb_list`` entry is reused for every ``lmax``.  A row whose
    solve fails carries the error message and a NaN energy.
    """
    lmax_list, nleb_list = list(lmax_list), list(nleb_list)
    if len(nleb_list) == 1:
        nleb_list = nleb_list * len(lmax_list)
    if len(nleb_list) != len(lmax_list):
        raise ValueError("lmax_list and nleb_list must have equal length")
    rows = []
    for lmax, n_leb in zip(lmax_list, nleb_list):
        t0 = time.perf_counter()
        try:
            rep = solve(cavity, charges, params,
                        SolveConfig(lmax=lmax, n_leb=n_leb, **config_kw))
        except DDLPBError as exc:
            rows.append(SweepRow(lmax, n_leb, float("nan"), 0,
                                 time.perf_counter() - t0, str(exc)))
            continue
        rows.append(SweepRow(lmax, n_leb, rep.energy, rep.outer_iterations,
                             rep.seconds))
    return rows
