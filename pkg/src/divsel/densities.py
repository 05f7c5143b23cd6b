"""Log densities: EDA, ED, the four Tweedie special cases, and the EDA score.

The EDA density of one entry is::

    p(x; mu, beta, phi) = x**((beta-1)/2) * exp(-d_beta(x|mu) / phi) / Z(mu, beta, phi)

on ``x > 0``.  ``Z`` comes from :mod:`divsel.quadrature`; the classes here add
memoization and, for large batches of distinct means, a validated spline of
``ln Z1`` against ``ln psi``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.special import gammaln

from .divergence import beta_div_elementwise, power
from .quadrature import default_rule, reduced_log_normalizer
from .tweedie import TweedieModel, tweedie_sample, tweedie_series_available, tweedie_series_logpdf

__all__ = [
    "EdaModel",
    "Case",
    "LogNormalizer",
    "get_log_normalizer",
    "eda_logpdf",
    "ed_logpdf",
    "closed_form_logpdf",
    "eda_score",
    "TweedieModel",
    "tweedie_series_available",
    "tweedie_series_logpdf",
    "tweedie_sample",
]


@dataclass(frozen=True, eq=False)
class EdaModel:
    mu: np.ndarray
    beta: float
    phi: float

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if np.any(~np.isfinite(mu)) or np.any(mu <= 0):
            raise ValueError("mu must be finite and positive")
        if not (np.isfinite(self.beta) and self.phi > 0 and np.isfinite(self.phi)):
            raise ValueError("beta must be finite and phi positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "phi", float(self.phi))


class LogNormalizer:
    """``ln Z`` for one ``beta`` (and augmentation choice), shared across calls.

    Small requests are answered exactly and memoized by the bit pattern of
    ``psi``.  Requests with more than ``interpolate_above`` distinct values go
    through a quintic spline in ``ln psi`` whose error is checked against exact
    values at every interval midpoint and must stay below ``tol``.
    """

    def __init__(self, beta, rule=None, augmented=True, interpolate_above=64, tol=1e-10):
        self.beta = float(beta)
        self.rule = default_rule() if rule is None else rule
        self.exponent = (self.beta - 1.0) / 2.0 if augmented else 0.0
        self.interpolate_above = interpolate_above
        self.tol = tol
        self._memo = {}
        self._lock = threading.Lock()
        self._spline = None
        self._range = (np.inf, -np.inf)
        self._spline_failed = False

    def _exact(self, psi):
        return reduced_log_normalizer(self.beta, psi, self.rule, self.exponent)

    def exact(self, psi):
        """Memoized exact ``ln Z1`` for an array of ``psi``."""
        psi = np.asarray(psi, dtype=float)
        flat = psi.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        memo = self._memo
        vals = np.array([memo.get(v, np.nan) for v in uniq.tolist()])
        miss = np.isnan(vals)
        if miss.any():
            new = self._exact(uniq[miss])
            vals[miss] = new
            with self._lock:
                if len(memo) > 1_000_000:
                    memo.clear()
                memo.update(zip(uniq[miss].tolist(), new.tolist()))
        return vals[inv].reshape(psi.shape)

    def _build_spline(self, lo, hi):
        h = 1.0 / 8
        for _ in range(6):
            grid = np.arange(np.floor(lo / h) - 4, np.ceil(hi / h) + 5) * h
            vals = self._exact(np.exp(grid))
            spline = make_interp_spline(grid, vals, k=5)
            mids = grid[2:-3] + 0.5 * h
            err = np.max(np.abs(spline(mids) - self._exact(np.exp(mids))))
            if err <= self.tol:
                return spline, (grid[2], grid[-3])
            h /= 2
        return None, None

    def reduced(self, psi):
        """``ln Z1`` for an array of ``psi`` values."""
        psi = np.asarray(psi, dtype=float)
        if np.any(~np.isfinite(psi)) or np.any(psi <= 0):
            raise FloatingPointError("reduced dispersion psi out of floating-point range")
        if psi.size <= self.interpolate_above or self._spline_failed:
            return self.exact(psi)
        lpsi = np.log(psi)
        lo, hi = float(lpsi.min()), float(lpsi.max())
        if self._spline is None or lo < self._range[0] or hi > self._range[1]:
            if np.unique(psi).size <= self.interpolate_above:
                return self.exact(psi)
            new_lo = min(lo, self._range[0]) - 1.0
            new_hi = max(hi, self._range[1]) + 1.0
            spline, rng = self._build_spline(new_lo, new_hi)
            with self._lock:
                if spline is None:
                    self._spline_failed = True
                    return self.exact(psi)
                self._spline, self._range = spline, rng
        return self._spline(lpsi)

    def __call__(self, mu, phi):
        """Elementwise ``ln Z(mu_i, beta, phi)``."""
        lmu = np.log(np.asarray(mu, dtype=float))
        psi = np.exp(np.log(phi) - (self.beta + 1.0) * lmu)
        return (self.exponent + 1.0) * lmu + self.reduced(psi)


@lru_cache(maxsize=256)
def get_log_normalizer(beta, rule=None, augmented=True) -> LogNormalizer:
    """Process-wide shared :class:`LogNormalizer` for ``(beta, rule, augmented)``."""
    return LogNormalizer(beta, rule, augmented)


def _check_x(x, mu):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if x.shape != mu.shape:
        raise ValueError(f"x and mu must have the same shape, got {x.shape} and {mu.shape}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("x must be finite and strictly positive (EDA support is (0, inf))")
    return x, mu


def eda_logpdf(x, model: EdaModel, rule=None) -> float:
    """Joint EDA log density of independent entries ``x_i`` with means ``mu_i``."""
    x, mu = _check_x(x, model.mu)
    beta, phi = model.beta, model.phi
    norm = get_log_normalizer(beta, rule)
    uniq, counts = np.unique(mu, return_counts=True)
    log_z = float(np.dot(counts, norm(uniq, phi)))
    div = float(np.sum(beta_div_elementwise(x, mu, beta)))
    aug = 0.5 * (beta - 1.0) * float(np.sum(np.log(x)))
    out = aug - div / phi - log_z
    if not np.isfinite(out):
        raise FloatingPointError("EDA log density is not finite")
    return out


def ed_logpdf(x, mu, beta, rule=None, phi=1.0) -> float:
    """Log density of the exponential-divergence model (no augmentation term)."""
    x, mu = _check_x(x, mu)
    norm = get_log_normalizer(float(beta), rule, augmented=False)
    uniq, counts = np.unique(mu, return_counts=True)
    log_z = float(np.dot(counts, norm(uniq, phi)))
    return -float(np.sum(beta_div_elementwise(x, mu, beta))) / phi - log_z


class Case(str, Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"
    GAMMA = "gamma"
    INVERSE_GAUSSIAN = "inverse_gaussian"

    @property
    def beta(self):
        return {"gaussian": 1.0, "poisson": 0.0, "gamma": -1.0, "inverse_gaussian": -2.0}[self.value]

    @property
    def p(self):
        return 1.0 - self.beta


def _poisson(y, m, stirling):
    integer = np.isclose(y, np.round(y), rtol=0, atol=1e-9 * np.maximum(1.0, y))
    use_stirling = ~integer if stirling is None else np.full(y.shape, bool(stirling))
    out = np.empty_like(y)
    e = ~use_stirling
    out[e] = y[e] * np.log(m[e]) - m[e] - gammaln(np.round(y[e]) + 1)
    s = use_stirling
    if np.any(y[s] <= 0):
        raise ValueError("Stirling form of the Poisson density needs x > 0")
    ys = y[s]
    out[s] = ys * np.log(m[s]) - m[s] - 0.5 * np.log(2 * np.pi * ys) - ys * np.log(ys) + ys
    return out


def closed_form_logpdf(x, mu, phi, case, stirling=None) -> float:
    """Sum of the exact log densities of a Tweedie special case.

    ``case`` is a :class:`Case` (or its string value).  For the Poisson case
    with ``phi != 1`` the scaled variable ``x/phi`` is Poisson with mean
    ``mu/phi``.  Integer ``x/phi`` use ``lnGamma``; other values use the
    first-order Stirling form, unless ``stirling`` forces one choice.
    """
    case = Case(case)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), x.shape)
    if not phi > 0 or np.any(mu <= 0):
        raise ValueError("mu and phi must be positive")
    if case is Case.GAUSSIAN:
        vals = -0.5 * np.log(2 * np.pi * phi) - (x - mu) ** 2 / (2 * phi)
    elif case is Case.POISSON:
        if np.any(x < 0):
            raise ValueError("Poisson support is x >= 0")
        vals = _poisson(x / phi, mu / phi, stirling) - np.log(phi)
    else:
        if np.any(x <= 0):
            raise ValueError("support is x > 0")
        if case is Case.GAMMA:
            k = 1.0 / phi
            vals = (k - 1) * np.log(x) - x / (phi * mu) - k * np.log(phi * mu) - gammaln(k)
        else:
            vals = -0.5 * np.log(2 * np.pi * phi * x**3) - (x / mu**2 / 2 - 1 / mu + 1 / (2 * x)) / phi
    return float(np.sum(vals))


def _exprel(t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    nz = t != 0
    with np.errstate(over="ignore"):
        out[nz] = np.expm1(t[nz]) / t[nz]
    return out


def score_parts(x, mu, beta):
    """Coefficients of the EDA score that are linear in ``1/phi``.

    Returns ``(A, B, A', C)`` with ``psi = A - B/phi`` and
    ``psi' = A' - C/phi``.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    beta = float(beta)
    u = np.log(x) - np.log(mu)
    a = 0.5 * (beta - 1.0) / x
    # (x^beta - mu^beta) / beta, continuous through beta = 0
    b = power(mu, beta) * u * _exprel(beta * u)
    ap = -0.5 * (beta - 1.0) / (x * x)
    c = power(x, beta - 1.0)
    return a, b, ap, c


def eda_score(x, mu, beta, phi):
    """``(psi, psi')``: first and second x-derivatives of the EDA log kernel."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(x <= 0) or np.any(mu <= 0) or not phi > 0:
        raise ValueError("x, mu and phi must be positive")
    a, b, ap, c = score_parts(x, mu, beta)
    psi, dpsi = a - b / phi, ap - c / phi
    if psi.ndim == 0:
        return float(psi), float(dpsi)
    return psi, dpsi
