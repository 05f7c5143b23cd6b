import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from divsel import (
    DataPair,
    DivergenceSpec,
    Family,
    alpha_div,
    beta_div,
    beta_div_grad_mu,
    connecting_scalar_alpha,
    connecting_scalar_beta,
    gamma_div,
    renyi_div,
    scalar_mean_fit,
)
from oracles import alpha_div_mp, beta_div_mp

pos = st.floats(min_value=0.05, max_value=20.0, allow_nan=False)


def pairs(n_min=1, n_max=6):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(st.lists(pos, min_size=n, max_size=n), st.lists(pos, min_size=n, max_size=n))
    )


# -- beta --------------------------------------------------------------------

def test_beta_euclidean_value():
    assert beta_div([2.0], [1.0], 1.0) == pytest.approx(0.5, rel=1e-14)


def test_beta_identity_is_zero():
    for b in (-2.5, -1, -0.3, 0, 0.7, 1, 3):
        assert beta_div([0.7, 1.3], [0.7, 1.3], b) == 0.0


def test_beta_itakura_saito_limit():
    assert beta_div([1.0], [2.0], -1.0) == pytest.approx(0.5 - math.log(0.5) - 1, rel=1e-13)
    assert beta_div([1.0], [2.0], -1.0 + 1e-9) == pytest.approx(0.5 - math.log(0.5) - 1, rel=1e-8)


def test_beta_against_extended_precision():
    got = beta_div([3.0, 1.0], [2.0, 2.0], 0.37)
    assert got == pytest.approx(float(beta_div_mp([3, 1], [2, 2], 0.37)), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(pairs(), st.floats(min_value=-3, max_value=3))
def test_beta_matches_oracle_and_nonnegative(p, b):
    x, mu = p
    got = beta_div(x, mu, b)
    ref = float(beta_div_mp(x, mu, b))
    assert got >= 0
    assert got == pytest.approx(ref, rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("singular", [0.0, -1.0])
def test_beta_near_singular_points(singular):
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, mu = rng.uniform(0.1, 5, 6), rng.uniform(0.1, 5, 6)
        d0 = beta_div(x, mu, singular)
        for eps in (1e-5, -1e-5, 1e-9, -1e-12):
            ref = float(beta_div_mp(x, mu, singular + eps))
            assert beta_div(x, mu, singular + eps) == pytest.approx(ref, rel=1e-10)
        # no jump at the singular point itself
        assert abs(beta_div(x, mu, singular + 1e-9) - d0) <= 1e-6 * (1 + d0)


def test_beta_zero_entries():
    # zeros are exact where the formula stays finite
    assert beta_div([0.0], [2.0], 1.0) == pytest.approx(2.0)
    assert beta_div([0.0], [2.0], 0.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        beta_div([0.0], [2.0], -1.0)
    with pytest.raises(ValueError):
        beta_div([0.0], [2.0], -2.0)


def test_beta_errors():
    with pytest.raises(ValueError):
        beta_div([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ValueError):
        beta_div([1.0], [0.0], 1.0)
    with pytest.raises(ValueError):
        beta_div([], [], 1.0)


def test_datapair_unpacks():
    pair = DataPair([1.0, 2.0], [2.0, 2.0])
    assert beta_div(*pair, 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        DataPair([1.0], [1.0, 2.0])


# -- alpha -------------------------------------------------------------------

def test_alpha_hellinger():
    assert alpha_div([4.0], [1.0], 0.5) == pytest.approx(2.0, rel=1e-14)


def test_alpha_identity():
    assert alpha_div([0.3, 2.0], [0.3, 2.0], 0.4) == 0.0


@settings(max_examples=150, deadline=None)
@given(pairs(), st.floats(min_value=-2, max_value=3))
def test_alpha_duality_and_oracle(p, a):
    x, mu = p
    d = alpha_div(x, mu, a)
    assert d == pytest.approx(alpha_div(mu, x, 1 - a), rel=1e-10, abs=1e-13)
    assert d == pytest.approx(float(alpha_div_mp(x, mu, a)), rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("singular", [0.0, 1.0])
def test_alpha_near_singular_points(singular):
    rng = np.random.default_rng(4)
    x, mu = rng.uniform(0.1, 5, 8), rng.uniform(0.1, 5, 8)
    d0 = alpha_div(x, mu, singular)
    for eps in (1e-5, -1e-5, 1e-10):
        ref = float(alpha_div_mp(x, mu, singular + eps))
        assert alpha_div(x, mu, singular + eps) == pytest.approx(ref, rel=1e-10)
    assert abs(alpha_div(x, mu, singular + 1e-9) - d0) <= 1e-6 * (1 + d0)


# -- gamma / Renyi -----------------------------------------------------------

def test_gamma_scaled_copy_is_zero():
    for g in (-1.5, -1, -0.5, 0, 0.5, 2):
        assert gamma_div([1.0, 1.0], [2.0, 2.0], g) == pytest.approx(0.0, abs=1e-14)
        assert gamma_div([1.0, 3.0], [1.0, 3.0], g) == pytest.approx(0.0, abs=1e-14)


def test_gamma_kl_limit():
    expected = (1 / 3) * math.log(1 / 2) + (2 / 3) * math.log(2)
    assert gamma_div([1.0, 2.0], [2.0, 1.0], 0.0) == pytest.approx(expected, rel=1e-13)
    assert gamma_div([1.0, 2.0], [2.0, 1.0], 1e-7) == pytest.approx(expected, rel=1e-6)


def _gamma_raw(x, mu, g):
    # textbook formula; only used away from its singular points
    x, mu = np.asarray(x), np.asarray(mu)
    return (np.log(np.sum(x ** (g + 1))) / (g * (g + 1)) + np.log(np.sum(mu ** (g + 1))) / (g + 1)
            - np.log(np.sum(x * mu**g)) / g)


@pytest.mark.parametrize("g", [-1.7, -0.8, -0.3, 0.4, 1.0, 2.5])
def test_gamma_matches_raw_formula(g):
    rng = np.random.default_rng(5)
    x, mu = rng.uniform(0.2, 4, 7), rng.uniform(0.2, 4, 7)
    assert gamma_div(x, mu, g) == pytest.approx(_gamma_raw(x, mu, g), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(pairs(2, 6), st.floats(min_value=-2, max_value=2), st.floats(min_value=0.01, max_value=100))
def test_gamma_scale_invariance(p, g, c):
    x, mu = p
    d = gamma_div(x, mu, g)
    assert d >= 0
    assert gamma_div(x, np.multiply(mu, c), g) == pytest.approx(d, rel=1e-10, abs=1e-12)


def test_gamma_single_entry_is_zero():
    assert gamma_div([3.0], [7.0], 0.0) == 0.0


def test_renyi_values():
    x, mu = np.array([1.0, 2.0]), np.array([2.0, 1.0])
    xt, mt = x / x.sum(), mu / mu.sum()
    ref = math.log(np.sum(xt**2 * mt ** (-1.0)))
    assert renyi_div(x, mu, 2.0) == pytest.approx(ref, rel=1e-13)
    assert renyi_div(x, mu, 1.0) == pytest.approx(gamma_div(x, mu, 0.0), abs=1e-12)
    assert renyi_div(x, mu, 1 + 1e-9) == pytest.approx(gamma_div(x, mu, 0.0), abs=1e-8)
    assert gamma_div(x, mu, 1e-9) == pytest.approx(gamma_div(x, mu, 0.0), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(pairs(2, 6), st.floats(min_value=0.05, max_value=4), st.floats(0.01, 100), st.floats(0.01, 100))
def test_renyi_scale_invariance(p, rho, c, d):
    x, mu = p
    r = renyi_div(x, mu, rho)
    assert r >= 0
    assert renyi_div(np.multiply(x, c), np.multiply(mu, d), rho) == pytest.approx(r, rel=1e-10, abs=1e-12)


def test_renyi_rejects_nonpositive_order():
    with pytest.raises(ValueError):
        renyi_div([1.0, 2.0], [1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        DivergenceSpec(Family.RENYI, -1.0)


# -- gradient, connecting scalars, scalar fit --------------------------------

def test_grad_values():
    assert beta_div_grad_mu([2.0], [1.0], 1.0) == pytest.approx([-1.0])
    assert np.all(beta_div_grad_mu([1.0, 2.0], [1.0, 2.0], 0.3) == 0)


@pytest.mark.parametrize("b", [-2.0, -1.0, -0.4, 0.0, 0.6, 1.0, 2.3])
def test_grad_finite_differences(b):
    rng = np.random.default_rng(6)
    x, mu = rng.uniform(0.3, 4, 5), rng.uniform(0.3, 4, 5)
    g = beta_div_grad_mu(x, mu, b)
    for i in range(5):
        h = 1e-6 * mu[i]
        up, dn = mu.copy(), mu.copy()
        up[i] += h
        dn[i] -= h
        fd = (beta_div(x, up, b) - beta_div(x, dn, b)) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_connecting_scalar_exact_scale():
    mu = np.array([0.5, 1.5, 3.0])
    for b in (-2, -1, 0, 0.5, 2):
        assert connecting_scalar_beta(2 * mu, mu, b) == pytest.approx(2.0, rel=1e-13)
    for a in (-1, 0, 0.5, 1, 2):
        assert connecting_scalar_alpha(3 * mu, mu, a) == pytest.approx(3.0, rel=1e-13)


def test_connecting_scalar_special_cases():
    assert connecting_scalar_beta([1.0, 3.0], [1.0, 1.0], 0.0) == pytest.approx(2.0)
    x, mu = np.array([1.0, 4.0, 2.0]), np.array([2.0, 1.0, 1.0])
    assert connecting_scalar_beta(x, mu, -1.0) == pytest.approx(np.mean(x / mu))
    assert connecting_scalar_alpha(x, mu, 1.0) == pytest.approx(connecting_scalar_beta(x, mu, 0.0), rel=1e-10)
    ref0 = math.exp(-np.sum(mu * np.log(mu / x)) / mu.sum())
    assert connecting_scalar_alpha(x, mu, 0.0) == pytest.approx(ref0, rel=1e-13)


@pytest.mark.parametrize("family,param", [("beta", 0.7), ("beta", -1.5), ("alpha", 0.5), ("alpha", -0.7)])
def test_connecting_scalar_optimality(family, param):
    rng = np.random.default_rng(7)
    x, mu = rng.uniform(0.2, 5, 6), rng.uniform(0.2, 5, 6)
    if family == "beta":
        c, div = connecting_scalar_beta(x, mu, param), beta_div
    else:
        c, div = connecting_scalar_alpha(x, mu, param), alpha_div
    best = div(x, c * mu, param)
    cs = 10 * (1 - rng.random(1000))
    assert all(best <= div(x, ci * mu, param) + 1e-12 for ci in cs)


def test_scalar_mean_fit():
    assert scalar_mean_fit([1.0, 2.0, 3.0], 0.3) == 2.0
    assert scalar_mean_fit([5.0]) == 5.0
    with pytest.raises(ValueError):
        scalar_mean_fit([])
    x = np.array([0.4, 1.7, 2.2, 6.0])
    for b in (-2, -1, 0, 1):
        res = minimize_scalar(lambda m: beta_div(x, np.full(4, m), b), bracket=(0.5, 2, 6), tol=1e-12)
        assert scalar_mean_fit(x, b) == pytest.approx(res.x, rel=1e-8)


def test_spec_object():
    s = DivergenceSpec("beta", 1.0)
    assert s.family is Family.BETA and s.separable
    assert s([2.0], [1.0]) == pytest.approx(0.5)
    assert not DivergenceSpec(Family.GAMMA, 0.5).separable
