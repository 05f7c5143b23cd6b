"""Multiplicative-update NMF (beta, alpha) and gamma-divergence projective NMF.

beta uses the package convention (beta=1 Euclidean, 0 KL, -1 Itakura-Saito),
which is the common literature's beta minus one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .divergence import (
    DivergenceSpec,
    Family,
    alpha_div_elementwise,
    beta_div_elementwise,
    gamma_div,
    power,
)

__all__ = [
    "Init",
    "Kind",
    "FitConfig",
    "FactorizationModel",
    "nmf_beta",
    "nmf_alpha",
    "pnmf_gamma",
    "NmfFitter",
    "PnmfFitter",
]

log = logging.getLogger(__name__)


class Init(str, Enum):
    RANDOM_UNIFORM = "random_uniform"
    PROVIDED = "provided"
    EUCLIDEAN_WARM_START = "euclidean_warm_start"


class Kind(str, Enum):
    LINEAR_NMF = "linear_nmf"
    PNMF = "pnmf"


@dataclass(frozen=True, eq=False)
class FitConfig:
    max_iters: int = 100
    seed: int = 0
    floor: float = 1e-12
    mask: np.ndarray | None = None
    init: Init = Init.RANDOM_UNIFORM
    W0: np.ndarray | None = None
    H0: np.ndarray | None = None
    warm_start_iters: int = 100
    step: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "init", Init(self.init))
        if not self.floor > 0:
            raise ValueError("floor must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not 0 < self.step <= 1:
            raise ValueError("step exponent must be in (0, 1]")


@dataclass(eq=False)
class FactorizationModel:
    W: np.ndarray
    H: np.ndarray | None
    kind: Kind
    objective_trace: np.ndarray
    V: np.ndarray | None = field(default=None, repr=False)
    monotone_violations: int = 0

    @property
    def K(self):
        return self.W.shape[1]

    @property
    def approximation(self):
        if self.kind is Kind.PNMF:
            return self.W @ (self.W.T @ self.V)
        return self.W @ self.H

    @property
    def iterations(self):
        return max(len(self.objective_trace) - 1, 0)


# -- shared helpers ----------------------------------------------------------

def _check_matrix(V, K, mask):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ValueError("V must be a matrix")
    F, N = V.shape
    if not 1 <= K <= min(F, N):
        raise ValueError(f"rank K={K} must be in [1, min(F, N)={min(F, N)}]")
    if mask is not None:
        mask = np.asarray(mask, dtype=float)
        if mask.shape != V.shape:
            raise ValueError("mask shape must match V")
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask must be binary")
        if np.any(mask.sum(axis=1) == 0) or np.any(mask.sum(axis=0) == 0):
            raise ValueError("mask leaves a row or column with no observed entries")
        V = np.where(mask == 1, V, 0.0)
    if np.any(~np.isfinite(V)) or np.any(V < 0):
        raise ValueError("V must be finite and nonnegative on observed entries")
    return V, mask


def _init_factors(V, K, cfg, mask):
    F, N = V.shape
    if cfg.init is Init.PROVIDED:
        if cfg.W0 is None or cfg.H0 is None:
            raise ValueError("provided initialization needs W0 and H0")
        W = np.array(cfg.W0, dtype=float)
        H = np.array(cfg.H0, dtype=float)
        if W.shape != (F, K) or H.shape != (K, N):
            raise ValueError("initial factor shapes do not match")
        return np.maximum(W, cfg.floor), np.maximum(H, cfg.floor)
    rng = np.random.default_rng(cfg.seed)
    scale = np.sqrt(4.0 * _observed_mean(V, mask) / K)
    W = (1.0 - rng.random((F, K))) * scale
    H = (1.0 - rng.random((K, N))) * scale
    return W, H


def _observed_mean(V, mask):
    m = float(V.mean()) if mask is None else float(V.sum() / mask.sum())
    return m if m > 0 else 1.0


def _mm_exponent(beta):
    # exponent making the multiplicative rule a majorization-minimization step
    if beta < 0:
        return 1.0 / (1.0 - beta)
    if beta > 1:
        return 1.0 / beta
    return 1.0


def _record(trace, obj, what):
    viol = len(trace) and obj > trace[-1] * (1 + 1e-10) + 1e-300
    trace.append(obj)
    if viol:
        log.info("%s objective increased at iteration %d", what, len(trace) - 1)
    return int(bool(viol))


# -- beta / alpha NMF --------------------------------------------------------

def nmf_beta(V, K, beta, cfg: FitConfig | None = None) -> FactorizationModel:
    """Factorize ``V ~ W H`` minimizing the (masked) beta-divergence."""
    cfg = FitConfig() if cfg is None else cfg
    beta = float(beta)
    V, mask = _check_matrix(V, K, cfg.mask)
    if beta <= -1 and np.any(V[mask == 1] == 0 if mask is not None else V == 0):
        raise ValueError("beta <= -1 needs strictly positive observed data")
    W, H = _init_factors(V, K, cfg, mask)
    M = np.ones_like(V) if mask is None else mask
    e = _mm_exponent(beta)
    fl = cfg.floor

    def objective(W, H):
        return float(np.sum(M * beta_div_elementwise(V, W @ H, beta)))

    trace = [objective(W, H)]
    bad = 0
    for _ in range(cfg.max_iters):
        Vh = W @ H
        num = W.T @ (M * V * power(Vh, beta - 1.0))
        den = np.maximum(W.T @ (M * power(Vh, beta)), fl)
        H = np.maximum(H * (num / den) ** e, fl)
        Vh = W @ H
        num = (M * V * power(Vh, beta - 1.0)) @ H.T
        den = np.maximum((M * power(Vh, beta)) @ H.T, fl)
        W = np.maximum(W * (num / den) ** e, fl)
        bad += _record(trace, objective(W, H), "beta-NMF")
    return FactorizationModel(W, H, Kind.LINEAR_NMF, np.array(trace), V, bad)


def nmf_alpha(V, K, alpha, cfg: FitConfig | None = None) -> FactorizationModel:
    """Factorize ``V ~ W H`` minimizing the (masked) alpha-divergence."""
    cfg = FitConfig() if cfg is None else cfg
    alpha = float(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    V, mask = _check_matrix(V, K, cfg.mask)
    if alpha < 0 and np.any(V[mask == 1] == 0 if mask is not None else V == 0):
        raise ValueError("alpha < 0 needs strictly positive observed data")
    W, H = _init_factors(V, K, cfg, mask)
    M = np.ones_like(V) if mask is None else mask
    inv = 1.0 / alpha
    fl = cfg.floor

    def objective(W, H):
        return float(np.sum(M * alpha_div_elementwise(V, W @ H, alpha)))

    trace = [objective(W, H)]
    bad = 0
    for _ in range(cfg.max_iters):
        R = M * power(V / (W @ H), alpha)
        H = np.maximum(H * ((W.T @ R) / np.maximum(W.T @ M, fl)) ** inv, fl)
        R = M * power(V / (W @ H), alpha)
        W = np.maximum(W * ((R @ H.T) / np.maximum(M @ H.T, fl)) ** inv, fl)
        bad += _record(trace, objective(W, H), "alpha-NMF")
    return FactorizationModel(W, H, Kind.LINEAR_NMF, np.array(trace), V, bad)


# -- projective NMF ----------------------------------------------------------

def _normalize(W):
    # a single scalar keeps W W^T V proportional, so the gamma objective is unchanged
    return W / np.linalg.norm(W, 2)


def _euclidean_pnmf(V, W, iters, fl):
    VVt = V @ V.T
    for _ in range(iters):
        A = VVt @ W
        num = 2.0 * A
        den = np.maximum(W @ (W.T @ A) + VVt @ (W @ (W.T @ W)), fl)
        W = _normalize(np.maximum(W * num / den, fl))
    return W


def pnmf_gamma(V, K, gamma, cfg: FitConfig | None = None) -> FactorizationModel:
    """Projective NMF ``V ~ W W^T V`` under the gamma-divergence.

    Each step is ``W <- W * (grad_minus / grad_plus) ** eta``; if the objective
    would increase, ``eta`` is halved for that step until it does not.
    """
    if cfg is None:
        cfg = FitConfig(init=Init.EUCLIDEAN_WARM_START)
    gamma = float(gamma)
    if cfg.mask is not None:
        raise ValueError("masks are not supported for projective NMF")
    V, _ = _check_matrix(V, K, None)
    if np.any(V.sum(axis=0) <= 0):
        raise ValueError("V needs positive column sums")
    if gamma <= -1 and np.any(V == 0):
        raise ValueError("gamma <= -1 needs strictly positive data")
    fl = cfg.floor
    F = V.shape[0]
    if cfg.init is Init.PROVIDED:
        if cfg.W0 is None or np.shape(cfg.W0) != (F, K):
            raise ValueError("provided initialization needs W0 of shape (F, K)")
        W = np.maximum(np.array(cfg.W0, dtype=float), fl)
    else:
        rng = np.random.default_rng(cfg.seed)
        W = 1.0 - rng.random((F, K))
        if cfg.init is Init.EUCLIDEAN_WARM_START:
            W = _euclidean_pnmf(V, _normalize(W), cfg.warm_start_iters, fl)
    W = _normalize(W)

    def objective(W):
        return gamma_div(V, np.maximum(W @ (W.T @ V), fl), gamma)

    trace = [objective(W)]
    bad = 0
    for _ in range(cfg.max_iters):
        Vh = np.maximum(W @ (W.T @ V), fl)
        P = power(Vh, gamma)
        Nn = V * power(Vh, gamma - 1.0)
        P /= P.ravel() @ Vh.ravel()
        Nn /= Nn.ravel() @ Vh.ravel()
        VtW = V.T @ W
        gp = P @ VtW + V @ (P.T @ W)
        gm = Nn @ VtW + V @ (Nn.T @ W)
        ratio = gm / np.maximum(gp, fl)
        eta = cfg.step
        for _ in range(40):
            Wn = _normalize(np.maximum(W * ratio**eta, fl))
            obj = objective(Wn)
            if obj <= trace[-1] * (1 + 1e-12):
                break
            eta *= 0.5
        else:
            Wn, obj = W, trace[-1]
        W = Wn
        bad += _record(trace, obj, "gamma-PNMF")
    return FactorizationModel(W, None, Kind.PNMF, np.array(trace), V, bad)


# -- fitters for selection ---------------------------------------------------

class NmfFitter:
    """Model fitter running beta- or alpha-NMF of rank ``rank``."""

    def __init__(self, rank, cfg: FitConfig | None = None):
        self.rank = int(rank)
        self.cfg = FitConfig() if cfg is None else cfg

    def fit_with_info(self, x, spec: DivergenceSpec):
        if spec.family is Family.BETA:
            m = nmf_beta(x, self.rank, spec.param, self.cfg)
        elif spec.family is Family.ALPHA:
            m = nmf_alpha(x, self.rank, spec.param, self.cfg)
        else:
            raise ValueError(f"NMF fitter does not support the {spec.family.value} family")
        return m.approximation, _info(m)

    def __call__(self, x, spec):
        return self.fit_with_info(x, spec)[0]


class PnmfFitter:
    """Model fitter running gamma-divergence projective NMF."""

    def __init__(self, rank, cfg: FitConfig | None = None):
        self.rank = int(rank)
        self.cfg = FitConfig(init=Init.EUCLIDEAN_WARM_START) if cfg is None else cfg

    def fit_with_info(self, x, spec: DivergenceSpec):
        if spec.family is not Family.GAMMA:
            raise ValueError(f"PNMF fitter does not support the {spec.family.value} family")
        m = pnmf_gamma(x, self.rank, spec.param, self.cfg)
        return m.approximation, _info(m)

    def __call__(self, x, spec):
        return self.fit_with_info(x, spec)[0]


def _info(m):
    return {
        "iterations": m.iterations,
        "objective": float(m.objective_trace[-1]),
        "monotone_violations": m.monotone_violations,
    }
