"""Discrete operators of the coupled Laplace / screened-Poisson system.

Unknowns are two blocks of harmonic coefficients of shape ``(M, nbasis)``:
``X_r`` expands the reaction potential on every sphere, ``X_e`` the
extended potential.  The global system reads::

    [A + C1    C2  ] [X_r]   [G0 + F0]
    [  C1    B + C2] [X_e] = [  F0   ]

``A`` and ``B`` are sparse (only overlapping balls couple), ``C1`` and
``C2`` are dense (they carry the screened single-layer operator between
all pairs of spheres, restricted to exposed nodes).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import radial
from .angular import degrees, eval_harmonics, grid_harmonics, lebedev_grid, nbasis
from .cavity import Cavity, PointCharges, build_exposure
from .errors import NonPositiveKappa, ProblemTooLarge, ShapeMismatch, SingularEvaluation

COINCIDENCE_TOL = 1e-10
DENSE_CAP = 20_000
KERNEL_CACHE_BYTES = 256 * 2**20


@dataclass(frozen=True)
class SolventParams:
    eps1: float = 1.0
    eps2: float = 78.54
    kappa: float = 0.104

    def __post_init__(self):
        if not self.eps1 > 0 or not self.eps2 > 0:
            raise ValueError("dielectric constants must be positive")
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError("kappa must be finite and non-negative")


@dataclass(frozen=True, eq=False)
class HarmonicCoeffs:
    """Per-ball coefficient block tagged ``"reaction"`` or ``"extended"``."""

    data: np.ndarray
    role: str = "reaction"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    @property
    def shape(self):
        return self.data.shape


def psi0_at(points, charges: PointCharges, eps1: float):
    """Vacuum potential sum_i q_i / (eps1 |x - x_i|) in e/Angstrom."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(charges) == 0:
        return np.zeros(pts.shape[0])
    d = np.linalg.norm(pts[:, None, :] - charges.positions[None], axis=2)
    if np.any(d < COINCIDENCE_TOL):
        raise SingularEvaluation("evaluation point coincides with a charge")
    return (charges.values / d).sum(axis=1) / eps1


def dpsi0_dn_at(points, normals, charges: PointCharges, eps1: float):
    """Directional derivative of the vacuum potential along ``normals``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nrm = np.atleast_2d(np.asarray(normals, dtype=float))
    if len(charges) == 0:
        return np.zeros(pts.shape[0])
    diff = pts[:, None, :] - charges.positions[None]
    d = np.linalg.norm(diff, axis=2)
    if np.any(d < COINCIDENCE_TOL):
        raise SingularEvaluation("evaluation point coincides with a charge")
    proj = np.einsum("pcx,px->pc", diff, nrm)
    return -(charges.values * proj / d**3).sum(axis=1) / eps1


class DiscreteOperators:
    """All discrete operators for one cavity, charge set and discretization.

    Parameters
    ----------
    cavity, charges : geometry and point charges
    params : SolventParams
    lmax, n_leb : truncation degree and Lebedev grid size
    deterministic : bool
        Use fixed-order einsum reductions instead of BLAS products, so that
        repeated runs are bit-identical regardless of threading.
    kernel_cache_bytes : int
        Memory cap for the cached single-layer kernel rows; beyond it the
        rows are recomputed on every application.
    """

    def __init__(self, cavity: Cavity, charges: PointCharges, params: SolventParams,
                 lmax: int, n_leb: int, deterministic=False,
                 kernel_cache_bytes=KERNEL_CACHE_BYTES, dense_cap=DENSE_CAP):
        if lmax < 0:
            raise ValueError("lmax must be non-negative")
        self.cavity = cavity
        self.charges = charges
        self.params = params
        self.lmax = int(lmax)
        self.grid = lebedev_grid(n_leb)
        self.cache = build_exposure(cavity, self.grid)
        self.deterministic = deterministic
        self.dense_cap = dense_cap

        self.nb = nbasis(self.lmax)
        self.M = len(cavity)
        self.centers = self.cache.centers
        self.radii = self.cache.radii
        self.ylm = grid_harmonics(self.lmax, self.grid.size)  # (N, nb)
        self.weights = self.grid.weights
        self.deg = degrees(self.lmax)

        c = self.cache
        kappa = params.kappa
        ypair = eval_harmonics(self.lmax, c.pair_s) if c.pair_s.size else \
            np.zeros((0, self.nb))
        src_r = self.radii[c.pair_source]
        lap = radial.interior_ratio(0.0, self.lmax, c.pair_r, src_r)
        hsp = radial.interior_ratio(kappa, self.lmax, c.pair_r, src_r)
        self._pair_a = ypair * lap.T[:, self.deg]
        self._pair_b = ypair * hsp.T[:, self.deg]
        self._pair_coef = self.weights[c.pair_node] * c.pair_weight

        # per-ball Neumann factors l/r_i and i'_l(r_i)/i_l(r_i)
        self.lap_dn = (self.deg[None, :] / self.radii[:, None])
        self.hsp_dn = radial.dlog_i(kappa, self.lmax, self.radii).T[:, self.deg]
        self.sl_factor = radial.single_layer_factor(
            kappa, self.lmax, self.radii).T[:, self.deg]

        chi = c.exposed.astype(float)
        self.P = np.einsum("jn,nb,nc->jbc", chi * self.weights, self.ylm, self.ylm)

        self.target_ball, self.target_node = c.exposed_indices()
        self.target_points = c.node_positions()[self.target_ball, self.target_node]
        self._kernel = None
        self._kernel_bytes = self.M * self.target_ball.size * self.nb * 8
        self._cache_kernel = self._kernel_bytes <= kernel_cache_bytes

    # -- helpers -------------------------------------------------------

    @property
    def size(self):
        return self.M * self.nb

    def memory_bytes(self):
        """Bytes held by the cached operator data."""
        arrays = [self.P, self._pair_a, self._pair_b, self._pair_coef]
        if self._kernel is not None:
            arrays.append(self._kernel)
        return int(sum(a.nbytes for a in arrays))

    def _block(self, X, name="X"):
        arr = np.asarray(X, dtype=float)
        if arr.size != self.size or arr.ndim not in (1, 2) or (
                arr.ndim == 2 and arr.shape != (self.M, self.nb)):
            raise ShapeMismatch(
                f"{name} must have shape ({self.M}, {self.nb}) or "
                f"({self.size},), got {arr.shape}")
        return arr.reshape(self.M, self.nb)

    def _dot(self, a, b):
        if self.deterministic:
            return np.einsum("ij,jk->ik", a, b)
        return a @ b

    def _nodes_to_coeffs(self, values):
        """Project (M, N) nodal values onto the basis of each sphere."""
        return self._dot(values * self.weights, self.ylm)

    def _targets_to_coeffs(self, values):
        """Project values given on exposed nodes (zero elsewhere)."""
        full = np.zeros((self.M, self.grid.size))
        full[self.target_ball, self.target_node] = values
        return self._nodes_to_coeffs(full)

    def kernel_block(self, i):
        """Single-layer response at every exposed node to harmonic densities
        on sphere ``i``: shape (T, nb), entry (t, b) is S_i[Y_b](x_t)."""
        if self._cache_kernel:
            if self._kernel is None:
                self._kernel = np.stack([self._compute_kernel(k)
                                         for k in range(self.M)])
            return self._kernel[i]
        return self._compute_kernel(i)

    def _compute_kernel(self, i):
        T = self.target_ball.size
        if T == 0:
            return np.zeros((0, self.nb))
        d = self.target_points - self.centers[i]
        r = np.linalg.norm(d, axis=1)
        own = self.target_ball == i
        s = d / r[:, None]
        r[own] = self.radii[i]
        s[own] = self.grid.points[self.target_node[own]]
        ext = radial.exterior_ratio(self.params.kappa, self.lmax, r,
                                    self.radii[i])  # (L+1, T)
        ys = eval_harmonics(self.lmax, s)
        return ys * ext.T[:, self.deg] * self.sl_factor[i]

    def _single_layer(self, densities):
        """Sum over sources of S_i applied to harmonic densities (M, nb) or
        (k, M, nb); returns values at exposed nodes, shape (T,) or (k, T)."""
        dens = np.asarray(densities)
        batch = dens.ndim == 3
        if not batch:
            dens = dens[None]
        out = np.zeros((dens.shape[0], self.target_ball.size))
        for i in range(self.M):
            coef = dens[:, i, :]
            if not np.any(coef):
                continue
            out += self._dot(coef, self.kernel_block(i).T)
        return out if batch else out[0]

    # -- sparse operators ----------------------------------------------

    def _apply_sparse(self, X, pair_rows):
        X = self._block(X)
        c = self.cache
        out = X.copy()
        if c.pair_target.size:
            vals = np.einsum("kb,kb->k", pair_rows, X[c.pair_source])
            acc = np.zeros((self.M, self.grid.size))
            np.add.at(acc, (c.pair_target, c.pair_node), vals * self._pair_coef)
            out -= self._dot(acc, self.ylm)
        return out

    def apply_A(self, X_r):
        """Laplace coupling: own trace minus weighted neighbor traces."""
        shape = np.shape(X_r)
        return self._apply_sparse(X_r, self._pair_a).reshape(shape)

    def apply_B(self, X_e):
        shape = np.shape(X_e)
        return self._apply_sparse(X_e, self._pair_b).reshape(shape)

    def sparse_matrix(self, which="A"):
        """Assemble A or B as a scipy CSR matrix from the pair data."""
        from scipy.sparse import coo_matrix, identity

        rows_pair = self._pair_a if which == "A" else self._pair_b
        c = self.cache
        if c.pair_target.size == 0:
            return identity(self.size, format="csr")
        # block (j, i): -sum_n coef Y(s_n) row(pair)
        left = self.ylm[c.pair_node] * self._pair_coef[:, None]  # (K, nb)
        K = c.pair_target.size
        vals = -(left[:, :, None] * rows_pair[:, None, :]).reshape(K, -1)
        r_idx = c.pair_target[:, None] * self.nb + np.arange(self.nb)
        c_idx = c.pair_source[:, None] * self.nb + np.arange(self.nb)
        rr = np.broadcast_to(r_idx[:, :, None], (K, self.nb, self.nb)).reshape(K, -1)
        cc = np.broadcast_to(c_idx[:, None, :], (K, self.nb, self.nb)).reshape(K, -1)
        mat = coo_matrix((vals.ravel(), (rr.ravel(), cc.ravel())),
                         shape=(self.size, self.size)).tocsr()
        return (identity(self.size, format="csr") + mat).tocsr()

    # -- dense coupling --------------------------------------------------

    def _require_kappa(self):
        # the kappa = 0 limit is handled analytically by the radial helpers
        if self.params.kappa < 0:
            raise NonPositiveKappa("kappa must be >= 0")

    def neumann_densities(self, X_r, X_e):
        """Harmonic coefficients of chi_i^e dn(psi_r) and chi_i^e dn(psi_e)."""
        X_r, X_e = self._block(X_r, "X_r"), self._block(X_e, "X_e")
        c_r = np.einsum("jbc,jc->jb", self.P, self.lap_dn * X_r)
        c_e = np.einsum("jbc,jc->jb", self.P, self.hsp_dn * X_e)
        return c_r, c_e

    def apply_C(self, X_r, X_e):
        """Return ``(C1 @ X_r, C2 @ X_e)``."""
        self._require_kappa()
        shape_r, shape_e = np.shape(X_r), np.shape(X_e)
        c_r, c_e = self.neumann_densities(X_r, X_e)
        v = self._single_layer(np.stack([c_r, c_e]))
        ratio = self.params.eps1 / self.params.eps2
        c1 = ratio * self._targets_to_coeffs(v[0])
        c2 = -self._targets_to_coeffs(v[1])
        return c1.reshape(shape_r), c2.reshape(shape_e)

    # -- right-hand sides ------------------------------------------------

    def psi0_exposed(self):
        return psi0_at(self.target_points, self.charges, self.params.eps1)

    def dpsi0_dn_exposed(self):
        normals = self.grid.points[self.target_node]
        return dpsi0_dn_at(self.target_points, normals, self.charges,
                           self.params.eps1)

    def dpsi0_dn(self, j, n):
        """Outward normal derivative of psi0 at node ``n`` of ball ``j``."""
        s = self.grid.points[n]
        x = self.centers[j] + self.radii[j] * s
        return float(dpsi0_dn_at(x, s, self.charges, self.params.eps1)[0])

    def rhs_G0(self):
        return -self._targets_to_coeffs(self.psi0_exposed())

    def rhs_F0(self):
        self._require_kappa()
        c0 = self._targets_to_coeffs(self.dpsi0_dn_exposed())
        s = self._single_layer(c0)
        return -(self.params.eps1 / self.params.eps2) * self._targets_to_coeffs(s)

    def project_exposed(self, values):
        """<chi_j^e g, Y_l^m> for ``g`` given at the exposed nodes."""
        return self._targets_to_coeffs(np.asarray(values, dtype=float))

    # -- global system ---------------------------------------------------

    def apply_global(self, x):
        """Matrix-free product with the full 2x2 block system."""
        x = np.asarray(x, dtype=float)
        X_r, X_e = x[:self.size], x[self.size:]
        c1, c2 = self.apply_C(X_r, X_e)
        top = self.apply_A(X_r).ravel() + c1.ravel() + c2.ravel()
        bottom = self.apply_B(X_e).ravel() + c1.ravel() + c2.ravel()
        return np.concatenate([top, bottom])

    def rhs_global(self):
        f0 = self.rhs_F0().ravel()
        return np.concatenate([self.rhs_G0().ravel() + f0, f0])

    # -- dense assembly (testing oracle) -----------------------------------

    def assemble_dense(self):
        """Explicit A, B, C1, C2 built entry by entry from their formulas.

        This path recomputes local coordinates, harmonics and radial factors
        node by node and shares no intermediate arrays with the matrix-free
        applications, so it can serve as their oracle.
        """
        if self.size > self.dense_cap:
            raise ProblemTooLarge(
                f"dense assembly of {self.size} unknowns exceeds the cap "
                f"of {self.dense_cap}")
        M, nb, L = self.M, self.nb, self.lmax
        kappa = self.params.kappa
        pts, w = self.grid.points, self.weights
        centers, radii = self.centers, self.radii
        deg = self.deg

        inside = np.zeros((M, pts.shape[0], M), dtype=bool)
        for j in range(M):
            xj = centers[j] + radii[j] * pts
            for i in range(M):
                if i != j:
                    d = np.linalg.norm(xj - centers[i], axis=1)
                    inside[j, :, i] = d < radii[i] - 1e-12
        count = inside.sum(axis=2)
        chi_e = (count == 0).astype(float)

        A = np.eye(M * nb)
        B = np.eye(M * nb)
        for j in range(M):
            for n in range(pts.shape[0]):
                if count[j, n] == 0:
                    continue
                x = centers[j] + radii[j] * pts[n]
                yn = eval_harmonics(L, pts[n])
                for i in np.nonzero(inside[j, n])[0]:
                    d = x - centers[i]
                    r = np.linalg.norm(d)
                    if r < 1e-12:
                        # node at the center of ball i: only l = 0 survives
                        r, s = 0.0, np.array([0.0, 0.0, 1.0])
                    else:
                        s = d / r
                    ys = eval_harmonics(L, s)
                    lap = (r / radii[i]) ** deg
                    hsp = radial.interior_ratio(kappa, L, np.array([r]),
                                                radii[i])[deg, 0]
                    wt = w[n] / count[j, n]
                    rows = slice(j * nb, (j + 1) * nb)
                    cols = slice(i * nb, (i + 1) * nb)
                    A[rows, cols] -= wt * np.outer(yn, lap * ys)
                    B[rows, cols] -= wt * np.outer(yn, hsp * ys)

        # P_i, then Q[(i, l'm'), (j, n)] on exposed target nodes
        Yg = np.array([eval_harmonics(L, p) for p in pts])
        P = np.zeros((M, nb, nb))
        for i in range(M):
            for n in range(pts.shape[0]):
                if chi_e[i, n]:
                    P[i] += w[n] * np.outer(Yg[n], Yg[n])
        sl = radial.single_layer_factor(kappa, L, radii)  # (L+1, M)
        lap_dn = deg / 1.0
        hsp_dn = radial.dlog_i(kappa, L, radii)            # (L+1, M)

        C1 = np.zeros((M * nb, M * nb))
        C2 = np.zeros((M * nb, M * nb))
        ratio = self.params.eps1 / self.params.eps2
        for j in range(M):
            for n in range(pts.shape[0]):
                if not chi_e[j, n]:
                    continue
                x = centers[j] + radii[j] * pts[n]
                yn = Yg[n]
                for i in range(M):
                    if i == j:
                        r, s = radii[i], pts[n]
                    else:
                        d = x - centers[i]
                        r = np.linalg.norm(d)
                        s = d / r
                    ext = radial.exterior_ratio(kappa, L, np.array([r]),
                                                radii[i])[:, 0]
                    y0 = eval_harmonics(L, s)
                    q_row = P[i].T @ (sl[deg, i] * ext[deg] * y0)  # over l'm'
                    rows = slice(j * nb, (j + 1) * nb)
                    cols = slice(i * nb, (i + 1) * nb)
                    C1[rows, cols] += ratio * w[n] * np.outer(
                        yn, q_row * lap_dn / radii[i])
                    C2[rows, cols] -= w[n] * np.outer(yn, q_row * hsp_dn[deg, i])
        return A, B, C1, C2
