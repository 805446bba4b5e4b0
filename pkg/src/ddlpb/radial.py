"""Modified spherical Bessel functions attached to a screening constant.

For a screening constant ``kappa`` and radius ``r`` (x = kappa*r)::

    i_l(r) = sqrt(pi / (2x)) I_{l+1/2}(x)      (regular at 0, grows like e^x)
    k_l(r) = sqrt(2 / (pi x)) K_{l+1/2}(x)     (singular at 0, decays like e^-x)

so that i_0 = sinh(x)/x and k_0 = e^-x/x.  Derivatives are taken in ``r``
unless a name says otherwise.

Internally nothing is formed from raw values.  The i-family is built from
the ratios i_{l+1}/i_l, obtained by a downward (Miller-type) recurrence,
and normalized against the closed form of i_0.  The k-family uses the
ratios k_{l+1}/k_l from the upward recurrence, which is stable.  Both are
accumulated as logarithms, so neither overflows for large ``x`` and
neither underflows for tiny ``x``.

``kappa == 0`` is accepted by the ratio helpers used by the operators and
returns the Laplace limits (r/r0)^l, (r0/r)^(l+1), l/r and r/(2l+1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveArgument


def _as_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise NonPositiveArgument(f"{name} must be finite and > 0")
    return arr


def _miller_start(lmax, xmax):
    # the continued fraction for i_{l+1}/i_l only starts converging once
    # the index exceeds x, so the start index tracks the largest argument
    return int(lmax + 20 + np.ceil(xmax + 6.0 * np.sqrt(xmax)))


def i_ratios(x, lmax):
    """Ratios i_{l+1}(x)/i_l(x) for l = 0..lmax, shape ``(lmax+1,) + x.shape``."""
    x = _as_positive("x", x)
    out = np.empty((lmax + 1,) + x.shape)
    rho = np.zeros_like(x)
    with np.errstate(over="ignore", divide="ignore"):
        for ell in range(_miller_start(lmax, float(np.max(x))), -1, -1):
            rho = 1.0 / ((2.0 * ell + 3.0) / x + rho)
            if ell <= lmax:
                out[ell] = rho
    return out


def k_ratios(x, lmax):
    """Ratios k_{l+1}(x)/k_l(x) for l = 0..lmax."""
    x = _as_positive("x", x)
    out = np.empty((lmax + 1,) + x.shape)
    sigma = 1.0 + 1.0 / x
    out[0] = sigma
    for ell in range(1, lmax + 1):
        sigma = 1.0 / sigma + (2.0 * ell + 1.0) / x
        out[ell] = sigma
    return out


# (sinh(x) - x)/x = sum_k x^(2k) / (2k+1)!, k >= 1; 12 terms reach eps at x = 1
_SINH_SERIES = 1.0 / np.array([float(np.prod(np.arange(1, 2 * k + 2)))
                               for k in range(12, 0, -1)])


def log_i0(x):
    x = _as_positive("x", x)
    out = np.empty_like(x)
    small = x < 1.0
    # log(sinh x / x) is ~x^2/6 for small x; summing the series avoids the
    # cancellation between x, log(1 - e^-2x) and log(x)
    xs = x[small] ** 2
    out[small] = np.log1p(np.polyval(np.append(_SINH_SERIES, 0.0), xs))
    xl = x[~small]
    out[~small] = xl + np.log(-np.expm1(-2.0 * xl) / 2.0) - np.log(xl)
    return out if out.ndim else out[()]


def log_k0(x):
    x = _as_positive("x", x)
    return -x - np.log(x)


def log_i(x, lmax, ratios=None):
    """log i_l(x) for l = 0..lmax (argument x, not r)."""
    rho = i_ratios(x, lmax) if ratios is None else ratios
    out = np.empty_like(rho)
    out[0] = log_i0(x)
    if lmax > 0:
        out[1:] = out[0] + np.cumsum(np.log(rho[:-1]), axis=0)
    return out


def log_k(x, lmax, ratios=None):
    sigma = k_ratios(x, lmax) if ratios is None else ratios
    out = np.empty_like(sigma)
    out[0] = log_k0(x)
    if lmax > 0:
        out[1:] = out[0] + np.cumsum(np.log(sigma[:-1]), axis=0)
    return out


def _degrees(lmax, shape):
    return np.arange(lmax + 1, dtype=float).reshape((-1,) + (1,) * len(shape))


def bessel_i_family(kappa, lmax, r):
    """First-kind family at radius ``r``.

    Returns ``(values, derivs, scale)`` with ``values[l] * exp(scale) ==
    i_l(r)`` and ``derivs[l] * exp(scale) == d/dr i_l(r)``; ``scale`` is
    kappa*r.  ``r`` may be a scalar or an array (extra trailing axes).
    """
    kappa = float(_as_positive("kappa", kappa))
    r = _as_positive("r", r)
    x = kappa * r
    rho = i_ratios(x, lmax)
    with np.errstate(under="ignore"):
        values = np.exp(log_i(x, lmax, rho) - x)
    derivs = values * (kappa * rho + _degrees(lmax, r.shape) / r)
    return values, derivs, x


def bessel_k_family(kappa, lmax, r):
    """Second-kind family; ``scale`` is -kappa*r."""
    kappa = float(_as_positive("kappa", kappa))
    r = _as_positive("r", r)
    x = kappa * r
    sigma = k_ratios(x, lmax)
    with np.errstate(over="ignore"):
        values = np.exp(log_k(x, lmax, sigma) + x)
    derivs = values * (_degrees(lmax, r.shape) / r - kappa * sigma)
    return values, derivs, -x


def ratio_ip_over_i(kappa, ell, r):
    """i'_l(r) / i_l(r)."""
    kappa = float(_as_positive("kappa", kappa))
    r = _as_positive("r", r)
    return kappa * i_ratios(kappa * r, ell)[ell] + ell / r


def ratio_kp_over_k(kappa, ell, r):
    """k'_l(r) / k_l(r)."""
    kappa = float(_as_positive("kappa", kappa))
    r = _as_positive("r", r)
    return ell / r - kappa * k_ratios(kappa * r, ell)[ell]


# -- helpers used by the operator layer; kappa == 0 means the Laplace limit


def _check_kappa(kappa):
    kappa = float(kappa)
    if not np.isfinite(kappa) or kappa < 0.0:
        raise NonPositiveArgument(f"kappa must be >= 0, got {kappa}")
    return kappa


def interior_ratio(kappa, lmax, r, r_ref):
    """i_l(r)/i_l(r_ref) for l = 0..lmax; ``r`` may be 0."""
    kappa = _check_kappa(kappa)
    r = np.asarray(r, dtype=float)
    r_ref = _as_positive("r_ref", np.broadcast_to(r_ref, r.shape))
    ell = _degrees(lmax, r.shape)
    if kappa == 0.0:
        return (r / r_ref) ** ell
    out = np.empty((lmax + 1,) + r.shape)
    zero = r <= 0.0
    out[:, zero] = 0.0
    out[0, zero] = 1.0
    pos = ~zero
    if np.any(pos):
        x, x_ref = kappa * r[pos], kappa * r_ref[pos]
        out[:, pos] = np.exp(log_i(x, lmax) - log_i(x_ref, lmax))
    return out


def exterior_ratio(kappa, lmax, r, r_ref):
    """k_l(r)/k_l(r_ref) for l = 0..lmax."""
    kappa = _check_kappa(kappa)
    r = _as_positive("r", r)
    r_ref = _as_positive("r_ref", np.broadcast_to(r_ref, r.shape))
    if kappa == 0.0:
        return (r_ref / r) ** (_degrees(lmax, r.shape) + 1.0)
    with np.errstate(under="ignore"):
        return np.exp(log_k(kappa * r, lmax) - log_k(kappa * r_ref, lmax))


def dlog_i(kappa, lmax, r):
    """i'_l(r)/i_l(r), the Neumann-to-Dirichlet factor of the HSP solver."""
    kappa = _check_kappa(kappa)
    r = _as_positive("r", r)
    ell = _degrees(lmax, r.shape)
    if kappa == 0.0:
        return ell / r
    return kappa * i_ratios(kappa * r, lmax) + ell / r


def single_layer_factor(kappa, lmax, r):
    """(i'_l/i_l - k'_l/k_l)^-1 at radius r.

    This is the eigenvalue of the screened single-layer operator of a
    sphere of radius r acting on a degree-l harmonic density.
    """
    kappa = _check_kappa(kappa)
    r = _as_positive("r", r)
    if kappa == 0.0:
        return r / (2.0 * _degrees(lmax, r.shape) + 1.0)
    x = kappa * r
    return 1.0 / (kappa * (i_ratios(x, lmax) + k_ratios(x, lmax)))


@dataclass(frozen=True)
class BesselTable:
    """Scaled values of both families on a set of radii.

    ``scaled_i[l, n] * exp(log_scales[n]) == i_l(r[n])`` and
    ``scaled_k[l, n] * exp(-log_scales[n]) == k_l(r[n])``.
    """

    kappa: float
    lmax: int
    r: np.ndarray
    scaled_i: np.ndarray
    scaled_k: np.ndarray
    log_scales: np.ndarray

    @classmethod
    def build(cls, kappa, lmax, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        vi, _, scale = bessel_i_family(kappa, lmax, r)
        vk, _, _ = bessel_k_family(kappa, lmax, r)
        return cls(float(kappa), int(lmax), r, vi, vk, scale)

    def i(self):
        return self.scaled_i * np.exp(self.log_scales)

    def k(self):
        return self.scaled_k * np.exp(-self.log_scales)
