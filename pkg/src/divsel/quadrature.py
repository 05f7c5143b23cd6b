"""Gauss-Laguerre rules and the EDA normalizing constant.

The normalizer ``Z(mu, beta, phi) = int_0^inf x^a exp(-d_beta(x|mu)/phi) dx``
(``a = (beta-1)/2`` for EDA, ``a = 0`` without augmentation) reduces to a
one-parameter integral.  Substituting ``x = mu e^u`` gives::

    ln Z = (a+1) ln mu + ln Z1(beta, a, psi),   psi = phi / mu**(beta+1)
    Z1   = int exp((a+1) u - g(beta+1, e^u) / psi) du

with ``g`` the kernel of :mod:`divsel.divergence`.  ``Z1`` is evaluated by
splitting the real line at the mode of the integrand and applying the
Laguerre rule to each half, scaled to the local width.  This keeps the
relative error near machine precision even when the integrand is a narrow
spike (small ``phi``) where a rule on the raw half line would miss it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import logsumexp

from ._backend import kernels

__all__ = [
    "DEFAULT_ORDER",
    "QuadratureRule",
    "laguerre_eval",
    "gauss_laguerre_rule",
    "default_rule",
    "integrate_halfline",
    "reduced_log_normalizer",
    "log_normalizer",
    "eda_log_normalizer",
]

DEFAULT_ORDER = 5000
MAX_ORDER = 10000
_NEWTON_ITERS = 10


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and log-weights of an ``order``-point Gauss-Laguerre rule.

    Weights are stored as logarithms because the trailing ones underflow
    double precision for large orders.
    """

    order: int
    nodes: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        for name in ("nodes", "log_weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def __repr__(self):
        return f"QuadratureRule(order={self.order})"


def laguerre_eval(n, z):
    """``(L_n(z), L_n'(z))`` from the three-term recurrence.

    The derivative uses ``L_n' = n (L_n - L_{n-1}) / z``, with ``L_n'(0) = -n``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if n == 0:
        return prev, np.zeros_like(z)
    cur = 1.0 - z
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - z) * cur - k * prev) / (k + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        deriv = np.where(z == 0, -float(n), n * (cur - prev) / z)
    if deriv.ndim == 0:
        return float(cur), float(deriv)
    return cur, deriv


@lru_cache(maxsize=8)
def gauss_laguerre_rule(n: int) -> QuadratureRule:
    """Build the ``n``-point Gauss-Laguerre rule.

    Initial nodes are the eigenvalues of the Jacobi matrix; Newton's method on
    ``L_n`` then polishes them to full precision.
    """
    n = int(n)
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {n}")
    if n == 1:
        return QuadratureRule(1, np.array([1.0]), np.array([0.0]))
    z = eigvalsh_tridiagonal(2.0 * np.arange(n) + 1.0, np.arange(1.0, n))
    step = np.inf
    for _ in range(_NEWTON_ITERS):
        lval, d, _ = kernels.laguerre_diff(n, z)
        # L_n' = n D_n / z
        dz = lval * z / (n * d)
        z = z - dz
        step = float(np.max(np.abs(dz) / z))
        if step < 1e-14:
            break
    if not (step < 1e-12 and np.all(np.diff(z) > 0) and z[0] > 0):
        raise RuntimeError(f"Laguerre root refinement did not converge (order {n})")
    lval, d, ls = kernels.laguerre_diff(n, z)
    # w_i = z_i / (n L_{n-1}(z_i))^2, and L_{n-1} = L_n - D_n
    log_w = np.log(z) - 2.0 * np.log(n) - 2.0 * (np.log(np.abs(lval - d)) + ls)
    return QuadratureRule(n, z, log_w)


def default_rule() -> QuadratureRule:
    return gauss_laguerre_rule(DEFAULT_ORDER)


def integrate_halfline(log_f, rule: QuadratureRule) -> float:
    """``ln int_0^inf f(z) dz`` given ``ln f``.

    ``log_f`` is called on the node vector; ``-inf`` marks a zero value.
    """
    z = rule.nodes
    try:
        lf = np.asarray(log_f(z), dtype=float)
        if lf.shape != z.shape:
            raise ValueError
    except (TypeError, ValueError):
        lf = np.array([float(log_f(float(v))) for v in z])
    if np.any(np.isnan(lf)) or np.any(lf == np.inf):
        raise ValueError("log_f must be finite or -inf on every node")
    return float(logsumexp(rule.log_weights + z + lf))


def reduced_log_normalizer(beta, psi, rule=None, exponent=None):
    """Batched ``ln Z1(beta, a, psi)``; ``exponent`` defaults to ``(beta-1)/2``.

    Raises ``ValueError`` when the integral diverges, which happens only for
    ``beta > -1`` with ``exponent <= -1``.
    """
    rule = default_rule() if rule is None else rule
    beta = float(beta)
    a = (beta - 1.0) / 2.0 if exponent is None else float(exponent)
    if beta > -1 and a <= -1:
        raise ValueError("normalizer diverges at the origin for this exponent")
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if np.any(~np.isfinite(psi)) or np.any(psi <= 0):
        raise FloatingPointError("reduced dispersion psi out of floating-point range")
    return np.asarray(kernels.reduced_log_normalizer(beta, a, psi, rule.nodes, rule.log_weights))


def log_normalizer(mu, beta, phi, rule=None, augmented=True):
    """Elementwise ``ln Z(mu_i, beta, phi)`` for a vector ``mu``."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0) or phi <= 0:
        raise ValueError("mu and phi must be positive")
    beta = float(beta)
    a = (beta - 1.0) / 2.0 if augmented else 0.0
    lmu = np.log(mu)
    psi = np.exp(np.log(phi) - (beta + 1.0) * lmu)
    out = (a + 1.0) * lmu + reduced_log_normalizer(beta, psi.ravel(), rule, a).reshape(mu.shape)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("log normalizer is not finite")
    return out


def eda_log_normalizer(mu, beta, phi, rule=None) -> float:
    """``ln Z`` of the EDA density for a single mean ``mu``."""
    if not (mu > 0 and phi > 0):
        raise ValueError("mu and phi must be positive")
    return float(log_normalizer(np.array([mu]), beta, phi, rule)[0])
