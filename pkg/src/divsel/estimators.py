"""Divergence selection: MEDAL grid search and score-matching baselines.

For each candidate parameter a fitter produces the model approximation
``mu``; the EDA log-likelihood of the data under ``mu`` is then maximized over
the dispersion ``phi`` and the parameter with the largest profile value wins.

* beta: EDA likelihood at ``(x, mu, beta)``.
* alpha: the alpha-divergence equals a beta-divergence between transformed
  vectors ``y = x**alpha / |alpha|**(2 alpha)`` with ``beta = 1/alpha - 1``;
  the likelihood is that of ``y`` plus the log-Jacobian of ``x -> y``.
* gamma / Renyi: the fitted ``mu`` is rescaled by the connecting scalar
  ``c*`` and then scored as beta / alpha with the same parameter.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .densities import get_log_normalizer, score_parts
from .divergence import (
    DivergenceSpec,
    Family,
    beta_div_elementwise,
    connecting_scalar_alpha,
    connecting_scalar_beta,
)

__all__ = [
    "SelectionGrid",
    "SelectionResult",
    "ScalarFitter",
    "PrecomputedFitter",
    "medal_select_beta",
    "medal_select_alpha",
    "select_gamma",
    "select_renyi",
    "medal_select",
    "profile_loglik",
    "alpha_transform",
    "sm_objective_eda",
    "sm_select_beta",
    "sm_select",
    "select",
]


# -- grid and result ---------------------------------------------------------

def _arange_inclusive(lo, step, hi):
    if step <= 0 or hi < lo:
        raise ValueError("grid needs step > 0 and hi >= lo")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


@dataclass(frozen=True, eq=False)
class SelectionGrid:
    """Candidate divergence parameters and the dispersion grid."""

    param_values: np.ndarray
    phi_values: np.ndarray = field(default_factory=lambda: np.logspace(-4, 2, 40))

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.param_values, dtype=float))
        f = np.atleast_1d(np.asarray(self.phi_values, dtype=float))
        if p.size == 0 or f.size == 0:
            raise ValueError("grids must be non-empty")
        if np.any(np.diff(p) <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("grids must be strictly increasing")
        if np.any(~np.isfinite(p)) or np.any(~np.isfinite(f)) or np.any(f <= 0):
            raise ValueError("phi values must be positive and all values finite")
        object.__setattr__(self, "param_values", p)
        object.__setattr__(self, "phi_values", f)

    @classmethod
    def from_ranges(cls, lo=-2.0, step=0.05, hi=2.0, phi_lo=1e-4, phi_hi=1e2, phi_count=40):
        return cls(_arange_inclusive(lo, step, hi), np.logspace(np.log10(phi_lo), np.log10(phi_hi), phi_count))

    def validate_for(self, family):
        family = Family(family)
        if family is Family.ALPHA and np.any(self.param_values == 0):
            raise ValueError("alpha grid must exclude 0")
        if family is Family.RENYI and np.any(self.param_values <= 0):
            raise ValueError("Renyi grid must be positive")


@dataclass
class SelectionResult:
    family: str
    estimator: str
    param_values: np.ndarray
    profile_loglik: np.ndarray
    best_param: float
    best_phi: float
    per_point_phi: np.ndarray
    diagnostics: list

    @property
    def best_index(self):
        return int(np.argmax(self.profile_loglik))

    def to_dict(self):
        d = asdict(self)
        for k in ("param_values", "profile_loglik", "per_point_phi"):
            d[k] = [_json_float(v) for v in np.asarray(d[k]).tolist()]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("param_values", "profile_loglik", "per_point_phi"):
            d[k] = np.array([_from_json_float(v) for v in d[k]], dtype=float)
        return cls(**d)


def _json_float(v):
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    if v != v:
        return "nan"
    return v


def _from_json_float(v):
    return float(v) if isinstance(v, str) else v


# -- fitters -----------------------------------------------------------------

class ScalarFitter:
    """The best constant approximation ``mu_i = m`` for each divergence.

    beta: arithmetic mean; alpha: power mean of order alpha; gamma and Renyi
    are scale-invariant, so any constant works and the mean is used.
    """

    def __call__(self, x, spec: DivergenceSpec):
        x = np.asarray(x, dtype=float)
        if spec.family is Family.ALPHA:
            a = spec.param
            lx = np.log(x)
            if a == 0:
                m = np.exp(lx.mean())
            else:
                top = np.max(a * lx)
                m = np.exp((top + np.log(np.mean(np.exp(a * lx - top)))) / a)
        else:
            m = float(np.mean(x))
        return np.full(x.shape, m)


class PrecomputedFitter:
    """Returns user-supplied approximations.

    ``mu`` is either one array used for every parameter or a mapping from
    parameter value to array.
    """

    def __init__(self, mu):
        self.mu = mu

    def __call__(self, x, spec: DivergenceSpec):
        if isinstance(self.mu, dict):
            return np.asarray(self.mu[spec.param], dtype=float)
        return np.asarray(self.mu, dtype=float)


def _fit(fitter, x, spec):
    fit_info = getattr(fitter, "fit_with_info", None)
    if fit_info is not None:
        mu, info = fit_info(x, spec)
    else:
        mu, info = fitter(x, spec), {}
    mu = np.asarray(mu, dtype=float)
    if mu.shape != x.shape:
        mu = np.broadcast_to(mu, x.shape).astype(float)
    if np.any(~np.isfinite(mu)) or np.any(mu <= 0):
        raise FloatingPointError("fitter returned a non-positive or non-finite approximation")
    return mu, dict(info)


# -- profile likelihood ------------------------------------------------------

class _Profile:
    """EDA log-likelihood of fixed ``(x, mu, beta)`` as a function of ``phi``."""

    def __init__(self, x, mu, beta, rule=None, extra=0.0):
        self.beta = float(beta)
        x = x.ravel()
        mu = mu.ravel()
        self.div = float(np.sum(beta_div_elementwise(x, mu, self.beta)))
        self.aug = 0.5 * (self.beta - 1.0) * float(np.sum(np.log(x)))
        uniq, counts = np.unique(mu, return_counts=True)
        self.lmu = np.log(uniq)
        self.counts = counts.astype(float)
        self.norm = get_log_normalizer(self.beta, rule)
        self.lz_mu = (self.norm.exponent + 1.0) * float(np.dot(self.counts, self.lmu))
        self.extra = float(extra)

    def __call__(self, phi):
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        lpsi = np.log(phi)[:, None] - (self.beta + 1.0) * self.lmu[None, :]
        lz = self.norm.reduced(np.exp(lpsi)) @ self.counts + self.lz_mu
        return self.aug - self.div / phi - lz + self.extra

    def maximize(self, phi_grid, refine=True):
        with np.errstate(all="ignore"):
            vals = self(phi_grid)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        j = int(np.argmax(vals))
        best_phi, best = float(phi_grid[j]), float(vals[j])
        if not np.isfinite(best):
            raise FloatingPointError("profile likelihood is not finite anywhere on the phi grid")
        if refine and phi_grid.size > 1:
            lo = np.log(phi_grid[max(j - 1, 0)])
            hi = np.log(phi_grid[min(j + 1, phi_grid.size - 1)])
            res = minimize_scalar(
                lambda t: -float(self(np.exp(t))[0]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-9},
            )
            if np.isfinite(res.fun) and -res.fun > best:
                best_phi = float(np.exp(res.x))
                best = float(self(best_phi)[0])
        return best, best_phi


def alpha_transform(x, alpha):
    """Map data or means to the beta-divergence space of parameter ``1/alpha - 1``."""
    alpha = float(alpha)
    if alpha == 0:
        raise ValueError("alpha = 0 has no beta counterpart")
    return np.exp(alpha * np.log(np.asarray(x, dtype=float)) - 2.0 * alpha * np.log(abs(alpha)))


def _alpha_parts(x, mu, alpha):
    beta = 1.0 / alpha - 1.0
    y = alpha_transform(x, alpha)
    m = alpha_transform(mu, alpha)
    jac = y.size * np.log(abs(beta + 1.0)) - beta * float(np.sum(np.log(y)))
    return y, m, beta, jac


def profile_loglik(x, mu, family, param, phi, rule=None):
    """Log-likelihood used by the selectors at one ``(param, phi)`` cell.

    For gamma and Renyi ``mu`` is rescaled by the connecting scalar first.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(_make_profile(x, mu, Family(family), float(param), rule)(phi)[0])


def _make_profile(x, mu, family, param, rule):
    if family is Family.GAMMA:
        mu = connecting_scalar_beta(x, mu, param) * mu
        family = Family.BETA
    elif family is Family.RENYI:
        mu = connecting_scalar_alpha(x, mu, param) * mu
        family = Family.ALPHA
    if family is Family.BETA:
        return _Profile(x, mu, param, rule)
    y, m, beta, jac = _alpha_parts(x, mu, param)
    return _Profile(y, m, beta, rule, extra=jac)


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("DIVSEL_THREADS", "1")))
    except ValueError:
        return 1


def _check_data(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty data")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("selection needs finite, strictly positive data")
    return x


def _run_grid(x, fitter, grid, family, estimator, point, workers):
    family = Family(family)
    grid.validate_for(family)
    x = _check_data(x)

    def task(i):
        param = float(grid.param_values[i])
        diag = {"param": param, "status": "ok"}
        try:
            mu, info = _fit(fitter, x, DivergenceSpec(family, param))
            diag.update(info)
            ll, phi = point(x, mu, family, param)
            if not np.isfinite(ll):
                raise FloatingPointError("non-finite profile likelihood")
        except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            diag.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            return -np.inf, np.nan, diag
        return ll, phi, diag

    n = grid.param_values.size
    nw = min(_workers(workers), n)
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            out = list(pool.map(task, range(n)))
    else:
        out = [task(i) for i in range(n)]
    prof = np.array([o[0] for o in out])
    phis = np.array([o[1] for o in out])
    if not np.any(np.isfinite(prof)):
        raise RuntimeError("every grid point failed; see diagnostics")
    best = int(np.argmax(prof))
    return SelectionResult(
        family=family.value,
        estimator=estimator,
        param_values=grid.param_values.copy(),
        profile_loglik=prof,
        best_param=float(grid.param_values[best]),
        best_phi=float(phis[best]),
        per_point_phi=phis,
        diagnostics=[o[2] for o in out],
    )


def medal_select(x, fitter, grid: SelectionGrid, family, rule=None, refine=True, workers=None):
    """MEDAL selection for any of the four families."""

    def point(x, mu, fam, param):
        prof = _make_profile(x, mu, fam, param, rule)
        return prof.maximize(grid.phi_values, refine)

    return _run_grid(x, fitter, grid, family, "medal", point, workers)


def medal_select_beta(x, fitter, grid, rule=None, **kw):
    return medal_select(x, fitter, grid, Family.BETA, rule, **kw)


def medal_select_alpha(x, fitter, grid, rule=None, **kw):
    return medal_select(x, fitter, grid, Family.ALPHA, rule, **kw)


def select_gamma(x, fitter, grid, rule=None, **kw):
    return medal_select(x, fitter, grid, Family.GAMMA, rule, **kw)


def select_renyi(x, fitter, grid, rule=None, **kw):
    return medal_select(x, fitter, grid, Family.RENYI, rule, **kw)


# -- score matching ----------------------------------------------------------

def _sm_coefficients(x, mu, beta, alpha=None):
    """``(c0, c1, c2)`` with ``J(lam) = c0 + c1 lam + c2 lam^2``, ``lam = 1/phi``.

    With ``alpha`` set, the score is that of the x-space density induced by
    the alpha transformation (chain rule through ``y(x)``).
    """
    if alpha is None:
        a, b, ap, c = score_parts(x, mu, beta)
    else:
        y = alpha_transform(x, alpha)
        m = alpha_transform(mu, alpha)
        ay, by, apy, cy = score_parts(y, m, beta)
        d1 = alpha * y / x
        d2 = alpha * (alpha - 1.0) * y / (x * x)
        a = ay * d1 + (alpha - 1.0) / x
        b = by * d1
        ap = apy * d1 * d1 + ay * d2 - (alpha - 1.0) / (x * x)
        c = cy * d1 * d1 + by * d2
    x2 = x * x
    c0 = np.mean(2 * x * a + x2 * ap + 0.5 * x2 * a * a)
    c1 = np.mean(-2 * x * b - x2 * c - x2 * a * b)
    c2 = np.mean(0.5 * x2 * b * b)
    return float(c0), float(c1), float(c2)


def sm_objective_eda(x, mu, beta, phi):
    """Nonnegative-support score-matching objective (lower is better).

    ``J = mean(2 x psi + x^2 psi' + x^2 psi^2 / 2)`` with the EDA score ``psi``.
    """
    x = np.asarray(x, dtype=float).ravel()
    mu = np.broadcast_to(np.asarray(mu, dtype=float), np.shape(x)).ravel()
    if np.any(x <= 0) or np.any(mu <= 0) or not phi > 0:
        raise ValueError("x, mu and phi must be positive")
    c0, c1, c2 = _sm_coefficients(x, mu, float(beta))
    lam = 1.0 / phi
    return c0 + c1 * lam + c2 * lam * lam


def _sm_minimize(coef, phi_grid):
    c0, c1, c2 = coef
    lam_lo, lam_hi = 1.0 / phi_grid[-1], 1.0 / phi_grid[0]
    cands = [lam_lo, lam_hi]
    if c2 > 0:
        cands.append(min(max(-c1 / (2 * c2), lam_lo), lam_hi))
    vals = [c0 + c1 * v + c2 * v * v for v in cands]
    k = int(np.nanargmin(vals))
    return float(vals[k]), 1.0 / cands[k]


def sm_select(x, fitter, grid: SelectionGrid, family=Family.BETA, workers=None):
    """Score-matching selection; the curve stores ``-J`` so higher is better.

    The objective is quadratic in ``1/phi``, so the inner minimization over the
    dispersion range of ``grid`` is done in closed form.
    """

    def point(x, mu, fam, param):
        xf = x.ravel()
        if fam is Family.GAMMA:
            mu = connecting_scalar_beta(x, mu, param) * mu
            fam = Family.BETA
        elif fam is Family.RENYI:
            mu = connecting_scalar_alpha(x, mu, param) * mu
            fam = Family.ALPHA
        muf = mu.ravel()
        if fam is Family.BETA:
            coef = _sm_coefficients(xf, muf, param)
        else:
            coef = _sm_coefficients(xf, muf, 1.0 / param - 1.0, alpha=param)
        j, phi = _sm_minimize(coef, grid.phi_values)
        return -j, phi

    return _run_grid(x, fitter, grid, family, "sm", point, workers)


def sm_select_beta(x, fitter, grid, **kw):
    return sm_select(x, fitter, grid, Family.BETA, **kw)


def select(x, fitter, grid, family, estimator="medal", rule=None, **kw):
    """Dispatch on ``estimator`` (``"medal"`` or ``"sm"``)."""
    if estimator == "medal":
        return medal_select(x, fitter, grid, family, rule, **kw)
    if estimator == "sm":
        return sm_select(x, fitter, grid, family, **kw)
    raise ValueError(f"unknown estimator {estimator!r}")
