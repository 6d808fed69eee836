import numpy as np
import pytest
from scipy import stats
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from invdetect.detection import (
    Chi2Test,
    SupTest,
    TestOutcome,
    chi2_null_draws,
    chi2_null_quantile,
    chi2_statistic,
    sup_statistic,
    sup_threshold,
)
from invdetect.gram import GramMatrix, NotPositiveDefinite

# mpmath, 40 digits
SUP_REAL_64 = 3.782754381905772863878788556
SUP_COMPLEX_64 = 4.545201124685762904022139015


def test_sup_threshold_closed_forms():
    assert sup_threshold(64, 0.05) == pytest.approx(SUP_REAL_64, rel=1e-12)
    assert sup_threshold(64, 0.05, "complex") == pytest.approx(SUP_COMPLEX_64, rel=1e-12)
    assert sup_threshold(1, 0.05) == pytest.approx(np.sqrt(2 * np.log(20)))


def test_sup_threshold_bad_args():
    with pytest.raises(ValueError):
        sup_threshold(0, 0.05)
    with pytest.raises(ValueError):
        sup_threshold(10, 1.5)
    with pytest.raises(ValueError):
        sup_threshold(2.5, 0.05)


@pytest.fixture
def vectors():
    rng = np.random.default_rng(3)
    return rng.standard_normal((5, 30)), rng.standard_normal((4, 30))


def test_sup_statistic_loop_oracle(vectors):
    W, Y = vectors
    w, sigma = 0.1, 1.7
    stat = sup_statistic(Y, W, sigma, w)
    for r in range(4):
        best = 0.0
        for k in range(5):
            pair = sum(w * Y[r, s] * W[k, s] for s in range(30))
            nrm = np.sqrt(sum(w * W[k, s] ** 2 for s in range(30)))
            best = max(best, abs(pair) / (sigma * nrm))
        assert stat[r] == pytest.approx(best, rel=1e-12)
    assert isinstance(sup_statistic(Y[0], W, sigma, w), float)


def test_chi2_statistic_loop_oracle(vectors):
    W, Y = vectors
    w = 0.1
    T = chi2_statistic(Y, W, w)
    for r in range(4):
        oracle = sum(abs(sum(w * Y[r, s] * W[k, s] for s in range(30))) ** 2 for k in range(5))
        assert T[r] == pytest.approx(oracle, rel=1e-12)


def test_statistics_complex(vectors):
    W, Y = vectors
    Wc = W + 1j * np.roll(W, 1, axis=1)
    Yc = Y + 0.5j * Y[::-1]
    T = chi2_statistic(Yc[0], Wc, 1.0)
    assert T == pytest.approx(np.sum(np.abs(Wc.conj() @ Yc[0]) ** 2))


def test_statistic_shape_mismatch(vectors):
    W, Y = vectors
    with pytest.raises(ValueError):
        chi2_statistic(Y[:, :10], W, 1.0)


def test_chi2_quantile_identity_matches_scipy():
    N, alpha, M = 6, 0.05, 10**5
    q = chi2_null_quantile(np.eye(N), 1.0, alpha, mc_draws=M, seed=0)
    exact = stats.chi2.ppf(1 - alpha, N)
    se = np.sqrt(alpha * (1 - alpha) / M) / stats.chi2.pdf(exact, N)
    assert abs(q - exact) < 3 * se
    qc = chi2_null_quantile(np.eye(N), 1.0, alpha, "complex", mc_draws=M, seed=0)
    exact_c = stats.chi2.ppf(1 - alpha, 2 * N)
    se_c = np.sqrt(alpha * (1 - alpha) / M) / stats.chi2.pdf(exact_c, 2 * N)
    assert abs(qc - exact_c) < 3 * se_c


def test_chi2_quantile_scales_with_sigma_squared():
    Xi = GramMatrix(np.diag([3.0, 1.0, 0.5]), "Xi")
    q1 = chi2_null_quantile(Xi, 1.0, 0.05, mc_draws=10**4, seed=5)
    q2 = chi2_null_quantile(Xi, 2.0, 0.05, mc_draws=10**4, seed=5)
    assert q2 == pytest.approx(4 * q1, rel=1e-12)


def test_null_draws_reproducible_and_block_stable():
    a = chi2_null_draws([1.0, 2.0], 1.0, "real", 25000, seed=9)
    b = chi2_null_draws([1.0, 2.0], 1.0, "real", 25000, seed=9)
    np.testing.assert_array_equal(a, b)
    c = chi2_null_draws([1.0, 2.0], 1.0, "real", 12000, seed=9)
    np.testing.assert_array_equal(a[:10000], c[:10000])
    assert np.mean(a) == pytest.approx(3.0, rel=0.03)


def test_chi2_quantile_errors():
    with pytest.raises(ValueError):
        chi2_null_quantile(np.eye(3), 1.0, 0.05, mc_draws=100)
    with pytest.raises(NotPositiveDefinite):
        chi2_null_quantile(np.diag([1.0, 0.0]), 1.0, 0.05, mc_draws=10**4)


def _noise(R, m, sigma, seed):
    # Y = sigma sqrt(n/vol) xi with vol = 1
    return sigma * np.sqrt(m) * np.random.default_rng(seed).standard_normal((R, m))


def test_level_under_null():
    rng = np.random.default_rng(0)
    m, R = 200, 5000
    W = rng.standard_normal((5, m))
    W[1] = W[0] + 0.3 * W[1]
    Y = _noise(R, m, 1.3, 1)
    se = np.sqrt(0.05 * 0.95 / R)
    chi = Chi2Test(alpha=0.05, sigma=1.3, mc_draws=10**5).fit(W, 1 / m)
    assert abs(chi.predict(Y).mean() - 0.05) < 3 * se
    sup = SupTest(alpha=0.05, sigma=1.3).fit(W, 1 / m)
    assert sup.predict(Y).mean() <= 0.05 + 3 * se


def test_estimator_api(vectors):
    W, Y = vectors
    t = SupTest(alpha=0.1, sigma=2.0)
    assert t.get_params() == {"alpha": 0.1, "sigma": 2.0, "field": "real"}
    with pytest.raises(NotFittedError):
        t.predict(Y)
    t.fit(W, 0.1)
    assert t.transform(Y).shape == (4, 5)
    np.testing.assert_allclose(t.decision_function(Y), t.statistic(Y) - t.threshold_)
    c = Chi2Test(mc_draws=10**4, seed=3)
    assert clone(c).get_params()["seed"] == 3
    with pytest.raises(NotFittedError):
        c.statistic(Y)
    c.fit(W, 0.1)
    assert c.null_quantile_ == c.threshold_ and c.gram_.N == 5
    assert c.transform(Y).shape == (4, 5)


def test_estimators_accept_systems(integration_system):
    s = integration_system
    rng = np.random.default_rng(0)
    Y = rng.standard_normal(s.operator.output_grid.n)
    sup = SupTest().fit(s)
    assert sup.statistic(Y) == pytest.approx(sup_statistic(Y, s))
    chi = Chi2Test(mc_draws=10**4).fit(s)
    assert chi.statistic(Y) == pytest.approx(chi2_statistic(Y, s), rel=1e-12)


def test_run_and_outcome_json(vectors):
    W, Y = vectors
    out = Chi2Test(mc_draws=10**4, seed=7).fit(W, 0.1).run(Y[0])
    assert out.seed == 7 and out.mc_draws == 10**4
    assert out.reject == (out.statistic > out.threshold)
    back = TestOutcome.from_json(out.to_json())
    assert back == out
    with pytest.raises(ValueError):
        TestOutcome(1.0, 2.0, True)
    with pytest.raises(ValueError):
        SupTest().fit(W, 0.1).run(Y)
