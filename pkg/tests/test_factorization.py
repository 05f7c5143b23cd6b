import numpy as np
import pytest

from divsel import (
    DatasetSpec,
    DivergenceSpec,
    FactorizationKind,
    FitConfig,
    Init,
    NmfFitter,
    PnmfFitter,
    block_labels,
    gamma_div,
    gen_dataset,
    nmf_alpha,
    nmf_beta,
    pnmf_gamma,
)


@pytest.fixture(scope="module")
def random_v():
    return np.random.default_rng(1).random((30, 20)) + 0.1


@pytest.fixture(scope="module")
def block():
    spec = DatasetSpec("block_matrix")
    return gen_dataset(spec, 0), block_labels(spec)


def _same_partition(a, b):
    return len(set(zip(a.tolist(), b.tolist()))) == len(set(a.tolist())) == len(set(b.tolist()))


@pytest.mark.parametrize("beta", [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0])
def test_beta_nmf_monotone(random_v, beta):
    m = nmf_beta(random_v, 5, beta, FitConfig(max_iters=100, seed=0))
    t = m.objective_trace
    assert len(t) == 101 and m.iterations == 100
    assert np.all(t[1:] <= t[:-1] * (1 + 1e-10))
    assert m.monotone_violations == 0
    assert np.all(m.W > 0) and np.all(m.H > 0)
    assert m.kind is FactorizationKind.LINEAR_NMF


@pytest.mark.parametrize("beta", [-1.0, 0.0, 1.0])
def test_beta_nmf_exact_rank_one(beta):
    rng = np.random.default_rng(2)
    V = np.outer(rng.random(30) + 0.5, rng.random(20) + 0.5)
    m = nmf_beta(V, 1, beta, FitConfig(max_iters=500, seed=0))
    assert m.objective_trace[-1] < 1e-8 * m.objective_trace[0]


def test_alpha_one_matches_beta_zero(random_v):
    a = nmf_alpha(random_v, 3, 1.0, FitConfig(seed=4))
    b = nmf_beta(random_v, 3, 0.0, FitConfig(seed=4))
    np.testing.assert_allclose(a.objective_trace, b.objective_trace, rtol=0, atol=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 2.0, -1.0])
def test_alpha_nmf_monotone_and_exact(block, alpha):
    V, _ = block
    m = nmf_alpha(V, 2, alpha, FitConfig(max_iters=100, seed=0))
    t = m.objective_trace
    assert np.all(t[1:] <= t[:-1] * (1 + 1e-10))
    rng = np.random.default_rng(5)
    R = np.outer(rng.random(10) + 0.5, rng.random(8) + 0.5)
    r = nmf_alpha(R, 1, alpha, FitConfig(max_iters=500, seed=0))
    assert r.objective_trace[-1] < 1e-8 * r.objective_trace[0]


def test_block_clustering_with_kl_nmf(block):
    V, labels = block
    m = nmf_beta(V, 2, 0.0, FitConfig(max_iters=200, seed=0))
    assert _same_partition(np.argmax(m.W, axis=1), labels)


def test_mask_ignores_hidden_cells(random_v):
    rng = np.random.default_rng(6)
    mask = (rng.random(random_v.shape) > 0.5).astype(float)
    cfg = FitConfig(max_iters=30, seed=1, mask=mask)
    a = nmf_beta(random_v, 3, 0.0, cfg)
    V2 = random_v.copy()
    V2[mask == 0] = 1e6
    b = nmf_beta(V2, 3, 0.0, cfg)
    np.testing.assert_array_equal(a.W, b.W)
    np.testing.assert_array_equal(a.H, b.H)
    assert np.all(np.diff(a.objective_trace) <= 1e-10 * a.objective_trace[:-1])


def test_determinism_and_provided_init(random_v):
    a = nmf_beta(random_v, 2, 0.5, FitConfig(seed=9))
    b = nmf_beta(random_v, 2, 0.5, FitConfig(seed=9))
    np.testing.assert_array_equal(a.W, b.W)
    W0, H0 = np.ones((30, 2)), np.ones((2, 20))
    c = nmf_beta(random_v, 2, 0.5, FitConfig(init=Init.PROVIDED, W0=W0, H0=H0, max_iters=0))
    np.testing.assert_array_equal(c.W, W0)


def test_input_validation(random_v):
    with pytest.raises(ValueError):
        nmf_beta(random_v, 0, 0.0)
    with pytest.raises(ValueError):
        nmf_beta(random_v, 21, 0.0)
    with pytest.raises(ValueError):
        nmf_beta(-random_v, 2, 0.0)
    mask = np.ones_like(random_v)
    mask[:, 0] = 0
    with pytest.raises(ValueError):
        nmf_beta(random_v, 2, 0.0, FitConfig(mask=mask))
    with pytest.raises(ValueError):
        nmf_alpha(random_v, 2, 0.0)
    with pytest.raises(ValueError):
        FitConfig(floor=0.0)
    zero = random_v.copy()
    zero[0, 0] = 0
    with pytest.raises(ValueError):
        nmf_beta(zero, 2, -1.0)


@pytest.mark.parametrize("gamma", [-0.8, 0.0, 1.0])
def test_pnmf_monotone_and_clusters(block, gamma):
    V, labels = block
    m = pnmf_gamma(V, 2, gamma, FitConfig(max_iters=500, init=Init.EUCLIDEAN_WARM_START))
    t = m.objective_trace
    assert np.all(t[1:] <= t[:-1] * (1 + 1e-10))
    assert m.kind is FactorizationKind.PNMF and m.H is None
    assert _same_partition(np.argmax(m.W, axis=1), labels)
    # scale is fixed by unit spectral norm of W
    assert np.linalg.norm(m.W, 2) == pytest.approx(1.0, rel=1e-12)
    assert m.objective_trace[-1] == pytest.approx(gamma_div(V, m.approximation, gamma), rel=1e-9)


def test_pnmf_rejects_masks(block):
    V, _ = block
    with pytest.raises(ValueError):
        pnmf_gamma(V, 2, 0.0, FitConfig(mask=np.ones_like(V)))


def test_fitters():
    V = np.random.default_rng(7).random((12, 9)) + 0.1
    mu, info = NmfFitter(2, FitConfig(max_iters=20)).fit_with_info(V, DivergenceSpec("beta", 0.0))
    assert mu.shape == V.shape and info["iterations"] == 20
    mu = NmfFitter(2)(V, DivergenceSpec("alpha", 0.5))
    assert np.all(mu > 0)
    mu = PnmfFitter(2, FitConfig(max_iters=10, init="euclidean_warm_start"))(V, DivergenceSpec("gamma", 0.5))
    assert mu.shape == V.shape
    with pytest.raises(ValueError):
        NmfFitter(2)(V, DivergenceSpec("gamma", 0.0))
    with pytest.raises(ValueError):
        PnmfFitter(2)(V, DivergenceSpec("beta", 0.0))
