"""Tweedie densities by series summation, and Tweedie samplers.

For power parameter ``p`` the Tweedie law has mean ``mu`` and variance
``phi * mu**p``.  ``p`` in ``(1, 2)`` is the compound Poisson-Gamma case
with an atom at zero; ``p > 2`` is continuous on ``(0, inf)``.  Densities
there have no closed form and are summed as series: start at the largest
term and walk outward until the terms are negligible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "TweedieModel",
    "tweedie_series_available",
    "tweedie_series_logpdf",
    "tweedie_sample",
]

_REL_TOL = np.log(1e-17)
_MAX_TERMS = 20000
_SPECIAL_P = (0.0, 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class TweedieModel:
    mu: float
    phi: float
    p: float

    def __post_init__(self):
        for name in ("mu", "phi", "p"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.mu > 0 and self.phi > 0):
            raise ValueError("mu and phi must be positive")
        if 0 < self.p < 1:
            raise ValueError("no Tweedie distribution exists for 0 < p < 1")

    @property
    def beta(self):
        return 1.0 - self.p

    @property
    def poisson_rate(self):
        """``lambda``, the rate of the Poisson number of Gamma summands."""
        return self.mu ** (2 - self.p) / (self.phi * (2 - self.p))


def tweedie_series_available(p) -> bool:
    """Whether ``p`` is covered by :func:`tweedie_series_logpdf`."""
    return bool((1 < p < 2) or p > 2)


def _log_terms(j, y, phi, p):
    """Log magnitudes, signs and log envelopes of the terms ``W_j`` at ``y``.

    The envelope drops the ``|sin|`` factor of the alternating series, whose
    zeros would otherwise pass for convergence.
    """
    a = (2 - p) / (1 - p)
    if p < 2:
        logz = -a * np.log(y) + a * np.log(p - 1) - (1 - a) * np.log(phi) - np.log(2 - p)
        mag = j * logz - gammaln(1 + j) - gammaln(-a * j)
        return mag, np.ones_like(j), mag
    # alternating series; the (p - 2)**j denominator is what makes p = 3
    # reproduce the inverse Gaussian density
    logz = (a - 1) * np.log(phi) + a * np.log(p - 1) - np.log(p - 2) - a * np.log(y)
    s = np.sin(np.pi * j * a)
    env = j * logz + gammaln(1 + j * a) - gammaln(1 + j) - np.log(np.pi)
    with np.errstate(divide="ignore"):
        mag = env + np.log(np.abs(s))
    sign = np.where(j % 2 == 0, -1.0, 1.0) * np.sign(s)
    return mag, sign, env


def _peak_index(y, phi, p):
    a = (2 - p) / (1 - p)
    if p < 2:
        logz = -a * np.log(y) + a * np.log(p - 1) - (1 - a) * np.log(phi) - np.log(2 - p)
        lj = (logz + a * np.log(-a)) / (1 - a)
    else:
        logz = (a - 1) * np.log(phi) + a * np.log(p - 1) - np.log(p - 2) - a * np.log(y)
        lj = (logz + a * np.log(a)) / (1 - a)
    return max(1, int(round(np.exp(min(lj, 40.0)))))


def _log_series(y, phi, p):
    jmax = _peak_index(y, phi, p)
    width = 16
    while True:
        lo = max(1, jmax - width)
        hi = jmax + width
        j = np.arange(lo, hi + 1, dtype=float)
        mag, sign, env = _log_terms(j, y, phi, p)
        top = np.max(mag)
        low_ok = lo == 1 or env[0] - top < _REL_TOL
        high_ok = env[-1] - top < _REL_TOL
        if low_ok and high_ok:
            break
        if width >= _MAX_TERMS:
            raise RuntimeError("Tweedie series did not converge within the term budget")
        width = min(2 * width, _MAX_TERMS)
    pos = sign > 0
    lp = logsumexp(mag[pos]) if pos.any() else -np.inf
    ln = logsumexp(mag[~pos]) if (~pos).any() else -np.inf
    if ln == -np.inf:
        return lp
    # keep the double-precision sum only if at least 10 digits survive
    if lp > ln and ln - lp < np.log1p(-1e-6):
        return lp + np.log1p(-np.exp(ln - lp))
    return _log_series_mp(y, phi, p, top, jmax)


def _log_series_mp(y, phi, p, top, jmax):
    """Alternating (p > 2) series in extended precision.

    Used where the double-precision sum cancels; the working precision grows
    until the result is resolved to about 15 digits.
    """
    import mpmath as mp

    if jmax > _MAX_TERMS:
        raise RuntimeError("Tweedie series lost all precision to cancellation")
    depth = 40.0
    while depth <= 8000:
        with mp.workdps(int((depth + 40) / 2.3) + 20):
            y_, phi_, p_ = mp.mpf(y), mp.mpf(phi), mp.mpf(p)
            a = (2 - p_) / (1 - p_)
            logz = (a - 1) * mp.log(phi_) + a * mp.log(p_ - 1) - mp.log(p_ - 2) - a * mp.log(y_)
            floor = top - depth - 40
            total = mp.mpf(0)
            j = 1
            while True:
                s = mp.sin(mp.pi * j * a)
                env = j * logz + mp.loggamma(1 + j * a) - mp.loggamma(1 + j) - mp.log(mp.pi)
                if s != 0:
                    term = mp.exp(env) * s
                    total += -term if j % 2 == 0 else term
                if j > jmax and env < floor:
                    break
                if j > jmax + _MAX_TERMS:
                    raise RuntimeError("Tweedie series did not converge within the term budget")
                j += 1
            if total > 0 and mp.log(total) > top - depth + 5:
                return float(mp.log(total))
        depth *= 2
    raise RuntimeError("Tweedie series lost all precision to cancellation")


def tweedie_series_logpdf(x, model: TweedieModel) -> float:
    """Log density (or log point mass at 0) of a Tweedie variable.

    Works for ``1 < p < 2`` (``x >= 0``) and ``p > 2`` (``x > 0``).  The
    closed-form cases ``p in {0, 1, 2, 3}`` belong to
    :func:`divsel.densities.closed_form_logpdf`.
    """
    p, mu, phi = model.p, model.mu, model.phi
    if not tweedie_series_available(p):
        raise ValueError(f"series expansion is not defined for p={p}")
    x = float(x)
    if x < 0 or (x == 0 and p > 2):
        raise ValueError("x outside the support")
    if x == 0:
        return -model.poisson_rate
    theta = mu ** (1 - p) / (1 - p)
    kappa = mu ** (2 - p) / (2 - p)
    return float(_log_series(x, phi, p) - np.log(x) + (x * theta - kappa) / phi)


def tweedie_sample(model: TweedieModel, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` iid Tweedie variates.

    Supported: the compound Poisson-Gamma range ``1 < p < 2`` and the named
    laws at ``p`` = 0 (Gaussian), 1 (scaled Poisson), 2 (Gamma) and 3
    (inverse Gaussian).
    """
    p, mu, phi = model.p, model.mu, model.phi
    count = int(count)
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    if p == 0:
        return rng.normal(mu, np.sqrt(phi), count)
    if p == 1:
        return phi * rng.poisson(mu / phi, count).astype(float)
    if p == 2:
        return rng.gamma(1 / phi, phi * mu, count)
    if p == 3:
        return rng.wald(mu, 1 / phi, count)
    if 1 < p < 2:
        n = rng.poisson(model.poisson_rate, count)
        shape = -(2 - p) / (1 - p)
        scale = phi * (p - 1) * mu ** (p - 1)
        out = np.zeros(count)
        pos = n > 0
        # a sum of n iid Gamma(shape) variables is Gamma(n * shape)
        out[pos] = rng.gamma(shape * n[pos], scale)
        return out
    raise ValueError(f"no sampler for p={p}")
