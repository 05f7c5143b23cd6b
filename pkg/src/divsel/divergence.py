"""Closed-form divergences of the beta, alpha, gamma and Renyi families.

Parameters follow the shifted convention used throughout the package:
``beta=1`` is half the squared Euclidean distance, ``beta -> 0`` is the
generalized Kullback-Leibler divergence and ``beta -> -1`` is Itakura-Saito.

All separable divergences are evaluated through one kernel::

    g(c, r) = (r**c - c*r + c - 1) / (c*(c - 1)),    r = x / mu

written in terms of ``u = ln r`` so that the removable singularities at
``c = 0`` and ``c = 1`` never produce ``0/0``.  Because the kernel is smooth
in ``c``, no threshold switch to separate limit formulas is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "Family",
    "DivergenceSpec",
    "DataPair",
    "power",
    "beta_div",
    "beta_div_elementwise",
    "alpha_div",
    "alpha_div_elementwise",
    "gamma_div",
    "renyi_div",
    "beta_div_grad_mu",
    "connecting_scalar_beta",
    "connecting_scalar_alpha",
    "scalar_mean_fit",
]


class Family(str, Enum):
    BETA = "beta"
    ALPHA = "alpha"
    GAMMA = "gamma"
    RENYI = "renyi"


def power(x, t):
    """``x**t`` for nonnegative ``x`` computed as ``exp(t*ln x)``.

    Every power in the package goes through here so that identities relating
    the alpha and beta families hold to the last bit.  ``0**t`` is 0 for
    ``t > 0``, 1 for ``t == 0`` and ``inf`` for ``t < 0``.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.exp(t * np.log(x))
    if t == 0:
        out = np.where(np.isnan(out), 1.0, out)
    return out


# -- stable kernel -----------------------------------------------------------

def _phi2(t):
    # (e^t - 1 - t) / t^2
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = np.abs(t) < 1e-3
    ts = t[small]
    out[small] = 0.5 + ts * (1 / 6 + ts * (1 / 24 + ts / 120))
    tl = t[~small]
    with np.errstate(over="ignore", invalid="ignore"):
        out[~small] = (np.expm1(tl) - tl) / (tl * tl)
    return out


def _k(u):
    # (u e^u - (e^u - 1)) / u^2
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < 1e-2
    us = u[small]
    out[small] = 0.5 + us * (1 / 3 + us * (1 / 8 + us / 30))
    ul = u[~small]
    with np.errstate(over="ignore", invalid="ignore"):
        out[~small] = (ul * np.exp(ul) - np.expm1(ul)) / (ul * ul)
    return out


def _kernel(c, u):
    """g(c, e^u) for finite ``u``; see the module docstring."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        if abs(c - 1.0) < 0.5:
            d = c - 1.0
            return u * u * (np.exp(u) * d * _phi2(d * u) + _k(u)) / c
        return u * u * (c * _phi2(c * u) - _phi2(u)) / (c - 1.0)


def _kernel_r(c, x, mu):
    """g(c, x/mu) with exact handling of ``x == 0`` (requires ``c > 0``)."""
    zero = x == 0
    with np.errstate(divide="ignore"):
        u = np.log(x) - np.log(mu)
    u = np.where(zero, 0.0, u)
    out = _kernel(c, u)
    if np.any(zero):
        out = np.where(zero, 1.0 / c, out)
    return out


# -- validation --------------------------------------------------------------

def _as_pair(x, mu, *, allow_zero_x):
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x.shape != mu.shape:
        raise ValueError(f"x and mu must have the same shape, got {x.shape} and {mu.shape}")
    if x.size == 0:
        raise ValueError("empty input")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(mu))):
        raise ValueError("x and mu must be finite")
    if np.any(mu <= 0):
        raise ValueError("mu must be strictly positive")
    if allow_zero_x:
        if np.any(x < 0):
            raise ValueError("x must be nonnegative")
    elif np.any(x <= 0):
        raise ValueError("x must be strictly positive for this parameter value")
    return x, mu


@dataclass(frozen=True)
class DataPair:
    """Observed data ``x`` and its model approximation ``mu``.

    Validation is deliberately lenient about zeros in ``x``; each divergence
    re-checks the support it needs.
    """

    x: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        x, mu = _as_pair(self.x, self.mu, allow_zero_x=True)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "mu", mu)

    def __iter__(self):
        yield self.x
        yield self.mu


# -- separable families ------------------------------------------------------

def beta_div_elementwise(x, mu, beta):
    """Per-entry beta-divergence ``d_beta(x_i | mu_i)``."""
    beta = float(beta)
    x, mu = _as_pair(x, mu, allow_zero_x=beta > -1)
    c = beta + 1.0
    return power(mu, c) * _kernel_r(c, x, mu)


def beta_div(x, mu, beta):
    """Beta-divergence summed over all entries.

    >>> beta_div([2.0], [1.0], 1.0)
    0.5
    """
    return float(np.sum(beta_div_elementwise(x, mu, beta)))


def alpha_div_elementwise(x, mu, alpha):
    """Per-entry alpha-divergence."""
    alpha = float(alpha)
    x, mu = _as_pair(x, mu, allow_zero_x=alpha > 0)
    return mu * _kernel_r(alpha, x, mu)


def alpha_div(x, mu, alpha):
    """Alpha-divergence summed over all entries.

    ``alpha=1/2`` gives twice the squared Hellinger distance; the limits
    ``alpha -> 1`` and ``alpha -> 0`` are the KL and reverse KL divergences.
    """
    return float(np.sum(alpha_div_elementwise(x, mu, alpha)))


def beta_div_grad_mu(x, mu, beta):
    """Elementwise derivative of :func:`beta_div` with respect to ``mu``."""
    x, mu = _as_pair(x, mu, allow_zero_x=True)
    return power(mu, float(beta) - 1.0) * (mu - x)


# -- scale-invariant families ------------------------------------------------

def _log_mean_exp_over_t(s, t, w):
    """``ln(sum_i w_i exp(t s_i)) / t`` with its ``t -> 0`` limit ``E_w[s]``.

    ``w`` are probability weights.
    """
    mean = float(np.dot(w, s))
    if t == 0:
        return mean
    sc = s - mean
    spread = abs(t) * float(np.max(np.abs(sc)))
    if spread < 0.5:
        # log1p keeps full relative precision when the exponent is tiny
        inner = float(np.dot(w, np.expm1(t * sc)))
        return mean + np.log1p(inner) / t
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    return mean + float(logsumexp(t * sc + lw)) / t


def _normalized_logs(v):
    lv = np.log(v)
    return lv - logsumexp(lv)


def gamma_div(x, mu, gamma):
    """Gamma-divergence; invariant to rescaling of either argument.

    ``gamma -> 0`` gives the KL divergence between the normalized vectors.
    """
    gamma = float(gamma)
    x, mu = _as_pair(x, mu, allow_zero_x=False)
    x = x.ravel()
    mu = mu.ravel()
    if gamma > -0.5:
        lx = _normalized_logs(x)
        lm = _normalized_logs(mu)
        wx = np.exp(lx)
        wm = np.exp(lm)
        ka = _log_mean_exp_over_t(lx, gamma, wx)
        kb = _log_mean_exp_over_t(lm, gamma, wx)
        kc = _log_mean_exp_over_t(lm, gamma, wm) * gamma
        val = (ka + kc - (gamma + 1.0) * kb) / (gamma + 1.0)
    else:
        # expansion around gamma = -1, written in c = gamma + 1
        c = gamma + 1.0
        lx = np.log(x)
        lm = np.log(mu)
        n = x.size
        uni = np.full(n, 1.0 / n)
        lr = lx - lm
        log_mean_r = float(logsumexp(lr)) - np.log(n)
        wr = np.exp(lr - logsumexp(lr))
        a = _log_mean_exp_over_t(lx, c, uni)
        b = _log_mean_exp_over_t(lm, c, uni)
        cc = _log_mean_exp_over_t(lm, c, wr) * c
        val = (a + (c - 1.0) * b - log_mean_r - cc) / gamma
    return max(float(val), 0.0)


def renyi_div(x, mu, rho):
    """Renyi divergence of order ``rho > 0`` between the normalized vectors."""
    rho = float(rho)
    if not rho > 0:
        raise ValueError("Renyi order rho must be positive")
    x, mu = _as_pair(x, mu, allow_zero_x=False)
    lx = _normalized_logs(x.ravel())
    lm = _normalized_logs(mu.ravel())
    val = _log_mean_exp_over_t(lx - lm, rho - 1.0, np.exp(lx))
    return max(float(val), 0.0)


# -- connecting scalars ------------------------------------------------------

def connecting_scalar_beta(x, mu, beta):
    """Minimizer ``c*`` of ``c -> beta_div(x, c*mu, beta)``.

    Equal to ``sum(x mu^beta) / sum(mu^(beta+1))`` for every ``beta``.
    """
    beta = float(beta)
    x, mu = _as_pair(x, mu, allow_zero_x=True)
    if not np.any(x > 0):
        raise ValueError("x must have a positive entry")
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    lm = np.log(mu)
    return float(np.exp(logsumexp(lx + beta * lm) - logsumexp((beta + 1.0) * lm)))


def connecting_scalar_alpha(x, mu, alpha):
    """Minimizer ``c*`` of ``c -> alpha_div(x, c*mu, alpha)``.

    ``(sum x^a mu^(1-a) / sum mu)^(1/a)``; at ``alpha -> 0`` this tends to the
    ``mu``-weighted geometric mean of ``x/mu``.
    """
    alpha = float(alpha)
    x, mu = _as_pair(x, mu, allow_zero_x=alpha > 0)
    x = x.ravel()
    mu = mu.ravel()
    w = mu / mu.sum()
    if alpha > 0 and np.any(x == 0):
        # zeros contribute nothing to sum(x^a mu^(1-a)) when alpha > 0
        pos = x > 0
        lr = np.log(x[pos] / mu[pos])
        lsum = logsumexp(alpha * lr, b=w[pos])
        return float(np.exp(lsum / alpha))
    lr = np.log(x) - np.log(mu)
    return float(np.exp(_log_mean_exp_over_t(lr, alpha, w)))


def scalar_mean_fit(x, beta=None):
    """Common scalar ``mu`` minimizing ``sum_i d_beta(x_i | mu)``.

    The stationarity condition ``mu^(beta-1) * sum(mu - x_i) = 0`` does not
    depend on ``beta``, so this is the arithmetic mean for every ``beta``.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty input")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("x must be finite and nonnegative")
    m = float(np.mean(x))
    if m <= 0:
        raise ValueError("x must have a positive entry")
    return m


# -- spec object -------------------------------------------------------------

_EVAL = {
    Family.BETA: beta_div,
    Family.ALPHA: alpha_div,
    Family.GAMMA: gamma_div,
    Family.RENYI: renyi_div,
}


@dataclass(frozen=True)
class DivergenceSpec:
    """A divergence family together with its parameter value."""

    family: Family
    param: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "param", float(self.param))
        if not np.isfinite(self.param):
            raise ValueError("divergence parameter must be finite")
        if self.family is Family.RENYI and self.param <= 0:
            raise ValueError("Renyi order rho must be positive")

    def __call__(self, x, mu):
        return _EVAL[self.family](x, mu, self.param)

    @property
    def separable(self):
        return self.family in (Family.BETA, Family.ALPHA)
