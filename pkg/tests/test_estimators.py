import math

import numpy as np
import pytest

from divsel import (
    PrecomputedFitter,
    ScalarFitter,
    SelectionGrid,
    SelectionResult,
    TweedieModel,
    alpha_div,
    alpha_transform,
    beta_div,
    eda_score,
    medal_select,
    medal_select_alpha,
    medal_select_beta,
    profile_loglik,
    select,
    select_gamma,
    select_renyi,
    sm_objective_eda,
    sm_select,
    sm_select_beta,
    tweedie_sample,
)


@pytest.fixture(scope="module")
def gamma_data():
    return tweedie_sample(TweedieModel(10.0, 1.0, 2.0), 4000, 1)


def test_grid_validation():
    with pytest.raises(ValueError):
        SelectionGrid([], [1.0])
    with pytest.raises(ValueError):
        SelectionGrid([0.0, 1.0], [0.0])
    g = SelectionGrid.from_ranges(-1, 0.5, 1)
    np.testing.assert_allclose(g.param_values, [-1, -0.5, 0, 0.5, 1])
    assert g.phi_values.size == 40
    with pytest.raises(ValueError):
        g.validate_for("alpha")
    with pytest.raises(ValueError):
        g.validate_for("renyi")
    g.validate_for("gamma")


def test_degenerate_grid_is_gaussian_density():
    x = np.array([10.0])
    res = medal_select_beta(x, ScalarFitter(), SelectionGrid([1.0], [1.0]), refine=False)
    assert res.best_param == 1.0 and res.best_phi == 1.0
    # x equals its own mean, so only the normalizer remains
    assert res.profile_loglik[0] == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-10)


def test_profile_coherence(gamma_data):
    grid = SelectionGrid.from_ranges(-1.5, 0.25, 0.5)
    res = medal_select_beta(gamma_data, ScalarFitter(), grid)
    i = res.best_index
    mu = np.full_like(gamma_data, gamma_data.mean())
    again = profile_loglik(gamma_data, mu, "beta", res.best_param, res.best_phi)
    assert res.profile_loglik[i] == pytest.approx(again, rel=1e-10)
    assert np.all(res.profile_loglik[i] >= res.profile_loglik)
    assert res.best_param == pytest.approx(-1.0, abs=0.15)


def test_refinement_never_lowers_the_profile(gamma_data):
    grid = SelectionGrid.from_ranges(-1.5, 0.5, 0.5, phi_count=12)
    coarse = medal_select_beta(gamma_data, ScalarFitter(), grid, refine=False)
    fine = medal_select_beta(gamma_data, ScalarFitter(), grid, refine=True)
    assert np.all(fine.profile_loglik >= coarse.profile_loglik - 1e-9)


def test_parallel_scan_is_deterministic(gamma_data, monkeypatch):
    grid = SelectionGrid.from_ranges(-1.5, 0.25, 0.5)
    serial = medal_select_beta(gamma_data, ScalarFitter(), grid)
    monkeypatch.setenv("DIVSEL_THREADS", "4")
    par = medal_select_beta(gamma_data, ScalarFitter(), grid)
    np.testing.assert_array_equal(serial.profile_loglik, par.profile_loglik)
    assert serial.best_param == par.best_param


def test_failed_fitter_points_are_marked():
    class Flaky(ScalarFitter):
        def __call__(self, x, spec):
            if spec.param > 0.4:
                raise RuntimeError("stalled")
            return super().__call__(x, spec)

    x = tweedie_sample(TweedieModel(5.0, 1.0, 0.0), 500, 2)
    res = medal_select_beta(x, Flaky(), SelectionGrid([0.0, 0.5, 1.0]))
    assert np.isneginf(res.profile_loglik[1:]).all()
    assert res.diagnostics[2]["status"] == "failed" and "stalled" in res.diagnostics[2]["error"]
    assert res.best_param == 0.0

    class Broken(ScalarFitter):
        def __call__(self, x, spec):
            raise RuntimeError("nope")

    with pytest.raises(RuntimeError):
        medal_select_beta(x, Broken(), SelectionGrid([0.0, 1.0]))


def test_alpha_transformation_identity():
    rng = np.random.default_rng(8)
    for a in (0.5, 2.0, -1.0, 1.3):
        x, mu = rng.uniform(0.2, 5, 50), rng.uniform(0.2, 5, 50)
        y, m = alpha_transform(x, a), alpha_transform(mu, a)
        assert beta_div(y, m, 1 / a - 1) == pytest.approx(alpha_div(x, mu, a), rel=1e-10)
    with pytest.raises(ValueError):
        alpha_transform(x, 0.0)


def test_alpha_one_equals_beta_zero():
    x = tweedie_sample(TweedieModel(6.0, 1.0, 1.0), 800, 3)
    x = x[x > 0]
    grid_a = SelectionGrid([1.0])
    grid_b = SelectionGrid([0.0])
    ra = medal_select_alpha(x, ScalarFitter(), grid_a)
    rb = medal_select_beta(x, ScalarFitter(), grid_b)
    assert ra.profile_loglik[0] == pytest.approx(rb.profile_loglik[0], rel=1e-10)


def test_gamma_exact_scale_has_zero_divergence():
    x = np.random.default_rng(9).uniform(1, 5, 40)
    for g in (-1.0, 0.0, 0.7):
        mu = 3.0 * x
        assert profile_loglik(x, mu, "gamma", g, 0.5) == pytest.approx(profile_loglik(x, x, "beta", g, 0.5), rel=1e-12)
    for r in (0.5, 1.0, 2.0):
        assert profile_loglik(x, 0.2 * x, "renyi", r, 0.5) == pytest.approx(
            profile_loglik(x, x, "alpha", r, 0.5), rel=1e-12)


def test_renyi_one_matches_gamma_zero():
    rng = np.random.default_rng(10)
    x = rng.uniform(1, 20, 300)
    mu = rng.uniform(1, 20, 300)
    fit = PrecomputedFitter(mu)
    rg = select_gamma(x, fit, SelectionGrid([0.0]))
    rr = select_renyi(x, fit, SelectionGrid([1.0]))
    assert rr.profile_loglik[0] == pytest.approx(rg.profile_loglik[0], abs=1e-8)


def test_precomputed_fitter_by_param():
    x = np.array([1.0, 2.0, 3.0])
    fit = PrecomputedFitter({0.0: np.array([2.0, 2.0, 2.0]), 1.0: np.array([1.0, 2.0, 3.0])})
    res = medal_select_beta(x, fit, SelectionGrid([0.0, 1.0]))
    assert res.per_point_phi.shape == (2,)


def test_sm_objective_spot_values():
    x = np.array([0.7, 1.5, 3.0])
    beta, phi = 0.4, 0.8
    psi, dpsi = eda_score(x, x, beta, phi)
    expected = np.mean(2 * x * psi + x * x * dpsi + 0.5 * x * x * psi * psi)
    assert sm_objective_eda(x, x, beta, phi) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("beta", [-1.5, -1.0, 0.0, 0.5, 1.0])
def test_sm_objective_finite_differences(beta):
    rng = np.random.default_rng(11)
    x = rng.uniform(0.5, 3, 20)
    mu = rng.uniform(0.5, 3, 20)
    phi = 0.6

    def logk(v, m):
        return 0.5 * (beta - 1) * math.log(v) - beta_div([v], [m], beta) / phi

    terms = []
    for v, m in zip(x, mu):
        h = 1e-4 * v
        f0, fp, fm = logk(v, m), logk(v + h, m), logk(v - h, m)
        d1 = (fp - fm) / (2 * h)
        d2 = (fp - 2 * f0 + fm) / (h * h)
        terms.append(2 * v * d1 + v * v * d2 + 0.5 * v * v * d1 * d1)
    assert sm_objective_eda(x, mu, beta, phi) == pytest.approx(np.mean(terms), rel=1e-5)


def test_sm_single_point_grid_and_selection(gamma_data):
    res = sm_select_beta(gamma_data, ScalarFitter(), SelectionGrid([0.3]))
    assert res.best_param == 0.3
    res = sm_select_beta(gamma_data, ScalarFitter(), SelectionGrid.from_ranges(-2, 0.05, 1))
    assert res.best_param == pytest.approx(-1.0, abs=0.2)
    assert res.estimator == "sm"


def test_sm_alpha_at_one_matches_beta_zero(gamma_data):
    ra = sm_select(gamma_data, ScalarFitter(), SelectionGrid([1.0]), "alpha")
    rb = sm_select(gamma_data, ScalarFitter(), SelectionGrid([0.0]), "beta")
    assert ra.profile_loglik[0] == pytest.approx(rb.profile_loglik[0], rel=1e-9)


def test_dispatch_and_result_round_trip(gamma_data):
    grid = SelectionGrid([-1.0, 0.0])
    res = select(gamma_data, ScalarFitter(), grid, "beta", "medal")
    back = SelectionResult.from_dict(res.to_dict())
    assert back.best_param == res.best_param
    np.testing.assert_array_equal(back.profile_loglik, res.profile_loglik)
    with pytest.raises(ValueError):
        select(gamma_data, ScalarFitter(), grid, "beta", "nope")


def test_selection_rejects_bad_data():
    with pytest.raises(ValueError):
        medal_select([0.0, 1.0], ScalarFitter(), SelectionGrid([1.0]), "beta")
    with pytest.raises(ValueError):
        medal_select([], ScalarFitter(), SelectionGrid([1.0]), "beta")
