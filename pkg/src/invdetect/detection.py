"""The sup-type test and the generalized chi-squared test.

Both follow the estimator conventions of scikit-learn: ``fit`` takes a
dictionary system (or raw vectors), ``transform`` returns per-index pivots or
pairings, ``decision_function`` returns statistic minus threshold and
``predict`` returns 1 for rejection of the null hypothesis ``f = 0``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_alpha, check_observations, check_sigma, check_vectors
from .gram import GramMatrix, GramVariant, gram_from_vectors
from .sampling import ScalarField, replication_rng

__all__ = [
    "sup_threshold",
    "sup_statistic",
    "chi2_statistic",
    "chi2_null_quantile",
    "chi2_null_draws",
    "TestOutcome",
    "SupTest",
    "Chi2Test",
    "MIN_MC_DRAWS",
    "DEFAULT_MC_DRAWS",
]

MIN_MC_DRAWS = 10**4
DEFAULT_MC_DRAWS = 10**5


def sup_threshold(N: int, alpha: float, field=ScalarField.REAL) -> float:
    """Union-bound threshold for ``N`` normalized pivots.

    Real: ``sqrt(2 log(N/alpha))``.  Complex:
    ``sqrt(1 + 2 sqrt(log(N/alpha)) + 2 log(N/alpha))``.
    """
    alpha = check_alpha(alpha)
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    ell = np.log(N / alpha)
    if ScalarField.coerce(field) is ScalarField.REAL:
        return float(np.sqrt(2 * ell))
    return float(np.sqrt(1 + 2 * np.sqrt(ell) + 2 * ell))


def _pairings(Y, W, weight, sigma=None):
    if hasattr(W, "pair"):
        Y2, single = check_observations(Y, W.operator.output_grid.n)
        return W.pair(Y2), single
    W, weight = check_vectors(W, weight, Y)
    Y2, single = check_observations(Y, W.shape[1])
    return weight * (Y2 @ np.conj(W).T), single


def _image_norms(W, weight):
    if hasattr(W, "pair"):
        X, weight = W.images, W.weight
    else:
        X, weight = check_vectors(W, weight)
    nrm = np.sqrt(weight * np.sum(np.abs(X) ** 2, axis=1))
    if np.any(nrm == 0):
        raise ValueError("zero-norm image")
    return nrm


def sup_statistic(Y, images, sigma: float = 1.0, weight: Optional[float] = None):
    """``max_k |<Y, A u_k>_n| / (sigma ||A u_k||_n)``; vectorized over a batch."""
    sigma = check_sigma(sigma)
    if not hasattr(images, "pair"):
        images, weight = check_vectors(images, weight, Y)
    P, single = _pairings(Y, images, weight)
    stat = np.max(np.abs(P) / (sigma * _image_norms(images, weight)), axis=1)
    return float(stat[0]) if single else stat


def chi2_statistic(Y, v, weight: Optional[float] = None):
    """``sum_k |<Y, v_k>_n|^2``; accepts a system (uses its vaguelettes) or vectors."""
    if hasattr(v, "pair"):
        Y2, single = check_observations(Y, v.operator.output_grid.n)
        P = v.pair(Y2, "vaguelettes")
    else:
        P, single = _pairings(Y, v, weight)
    T = np.sum(np.abs(P) ** 2, axis=1)
    return float(T[0]) if single else T


def _block_rows(N: int) -> int:
    return max(1, min(MIN_MC_DRAWS, 2**21 // max(N, 1)))


def chi2_null_draws(eigenvalues, sigma: float, field, mc_draws: int, seed: int = 0) -> np.ndarray:
    """Draws of ``sigma^2 sum_k s_k Q_k`` with ``Q_k`` chi2(1) (real) or chi2(2) (complex).

    Draws are generated in fixed-size blocks, block ``b`` from the stream
    ``(seed, b)``, so the sample depends only on ``(seed, mc_draws, N)``.
    """
    s = np.asarray(eigenvalues, dtype=float)
    field = ScalarField.coerce(field)
    dof = 1 if field is ScalarField.REAL else 2
    rows = _block_rows(s.size)
    out = np.empty(mc_draws)
    for b, start in enumerate(range(0, mc_draws, rows)):
        r = min(rows, mc_draws - start)
        rng = replication_rng(seed, b)
        Z = rng.standard_normal((r, s.size, dof))
        out[start : start + r] = np.einsum("rkd,k->r", Z * Z, s)
    return sigma**2 * out


def chi2_null_quantile(Xi, sigma: float, alpha: float, field=ScalarField.REAL, mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0) -> float:
    """Monte-Carlo ``(1 - alpha)``-quantile of the null chi-squared mixture."""
    sigma = check_sigma(sigma)
    alpha = check_alpha(alpha)
    if int(mc_draws) != mc_draws or mc_draws < MIN_MC_DRAWS:
        raise ValueError(f"mc_draws must be an integer >= {MIN_MC_DRAWS}, got {mc_draws}")
    if not isinstance(Xi, GramMatrix):
        Xi = GramMatrix(Xi, GramVariant.XI)
    Xi.check_positive_definite()
    draws = chi2_null_draws(Xi.eigenvalues, sigma, field, int(mc_draws), seed)
    return float(np.quantile(draws, 1 - alpha))


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    threshold: float
    reject: bool
    seed: Optional[int] = None
    mc_draws: Optional[int] = None

    __test__ = False

    def __post_init__(self):
        if bool(self.reject) != (self.statistic > self.threshold):
            raise ValueError("reject must equal statistic > threshold")

    def to_json(self) -> str:
        d = asdict(self)
        d["reject"] = bool(d["reject"])
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "TestOutcome":
        return cls(**json.loads(text))


class _DetectionTest(BaseEstimator):
    def _check_fitted(self):
        if not hasattr(self, "threshold_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def decision_function(self, Y):
        return self.statistic(Y) - self.threshold_

    def predict(self, Y):
        d = self.decision_function(Y)
        return int(d > 0) if np.isscalar(d) else (d > 0).astype(int)

    def run(self, Y) -> TestOutcome:
        stat = self.statistic(Y)
        if not np.isscalar(stat):
            raise ValueError("run expects a single observation")
        return TestOutcome(float(stat), float(self.threshold_), bool(stat > self.threshold_), *self._provenance())

    def _provenance(self):
        return (None, None)


class SupTest(_DetectionTest):
    """Reject when some normalized pivot exceeds the union-bound threshold.

    Parameters
    ----------
    alpha : float
        Level of the test.
    sigma : float
        Noise level; pivots are divided by it.
    field : {'real', 'complex'}
    """

    def __init__(self, alpha=0.05, sigma=1.0, field="real"):
        self.alpha = alpha
        self.sigma = sigma
        self.field = field

    def fit(self, images, weight=None):
        """Store the images ``A u_k`` (a dictionary system or an ``(N, m)`` array)."""
        check_alpha(self.alpha)
        check_sigma(self.sigma)
        if hasattr(images, "pair"):
            W, w = images.images, images.weight
        else:
            W, w = check_vectors(images, weight)
        self.images_ = np.asarray(W)
        self.weight_ = float(w)
        self.norms_ = _image_norms(self.images_, self.weight_)
        self.n_features_in_ = self.images_.shape[1]
        self.N_ = self.images_.shape[0]
        self.threshold_ = sup_threshold(self.N_, self.alpha, self.field)
        return self

    def transform(self, Y):
        """Pivots ``|<Y, A u_k>_n| / (sigma ||A u_k||_n)``, shape ``(R, N)``."""
        self._check_fitted()
        Y2, _ = check_observations(Y, self.n_features_in_)
        return np.abs(self.weight_ * (Y2 @ np.conj(self.images_).T)) / (self.sigma * self.norms_)

    def statistic(self, Y):
        self._check_fitted()
        _, single = check_observations(Y, self.n_features_in_)
        s = self.transform(Y).max(axis=1)
        return float(s[0]) if single else s


class Chi2Test(_DetectionTest):
    """Reject when ``sum_k |<Y, v_k>_n|^2`` exceeds its simulated null quantile.

    Parameters
    ----------
    alpha, sigma, field
        As for :class:`SupTest`.
    mc_draws : int
        Monte-Carlo size behind the null quantile (at least 10^4).
    seed : int
        Seed of the quantile simulation.
    """

    def __init__(self, alpha=0.05, sigma=1.0, field="real", mc_draws=DEFAULT_MC_DRAWS, seed=0):
        self.alpha = alpha
        self.sigma = sigma
        self.field = field
        self.mc_draws = mc_draws
        self.seed = seed

    def fit(self, vaguelettes, weight=None):
        """Build ``Xi`` from the vaguelettes and simulate the null quantile."""
        if hasattr(vaguelettes, "pair"):
            if vaguelettes.vaguelettes is None:
                raise ValueError("system has no vaguelettes")
            V, w = vaguelettes.vaguelettes, vaguelettes.weight
        else:
            V, w = check_vectors(vaguelettes, weight)
        self.vaguelettes_ = np.asarray(V)
        self.weight_ = float(w)
        self.n_features_in_ = self.vaguelettes_.shape[1]
        self.gram_ = gram_from_vectors(self.vaguelettes_, self.weight_, GramVariant.XI)
        self.threshold_ = chi2_null_quantile(self.gram_, self.sigma, self.alpha, self.field, self.mc_draws, self.seed)
        self.null_quantile_ = self.threshold_
        return self

    def transform(self, Y):
        """Pairings ``<Y, v_k>_n``, shape ``(R, N)``."""
        self._check_fitted()
        Y2, _ = check_observations(Y, self.n_features_in_)
        return self.weight_ * (Y2 @ np.conj(self.vaguelettes_).T)

    def statistic(self, Y):
        self._check_fitted()
        _, single = check_observations(Y, self.n_features_in_)
        T = np.sum(np.abs(self.transform(Y)) ** 2, axis=1)
        return float(T[0]) if single else T

    def _provenance(self):
        return (int(self.seed), int(self.mc_draws))
