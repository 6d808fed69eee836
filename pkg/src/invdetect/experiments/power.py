"""Monte-Carlo power of the two tests and the search for ``delta`` at a target power.

Two simulation routes are provided.

* Pairing space: the tests only see the pairings of the data with a finite
  family (normalized images for the sup test, vaguelettes for the chi-squared
  test).  On the discretized model these are jointly Gaussian with known mean
  and covariance, so they can be drawn directly.  This is exact in
  distribution and avoids synthesizing full observations.
* Grid: full observations ``Y = A f + sigma sqrt(n / vol) xi`` are simulated
  on the output grid and passed to the fitted test estimators.

Both routes use common random numbers across ``delta`` values: replication
``r`` always uses the stream ``(seed, r)``.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..detection import Chi2Test, SupTest, chi2_null_quantile, sup_threshold
from ..gram import GramVariant, gram, gram_from_vectors
from ..sampling import ScalarField, replication_rng, standard_noise

__all__ = [
    "PowerPoint",
    "PowerCurve",
    "BracketError",
    "DeltaEstimate",
    "SupPairingSimulator",
    "Chi2PairingSimulator",
    "GridSimulator",
    "sphere_coefficients",
    "sample_uniform_sphere_alternative",
    "find_delta_at_power",
]


@dataclass(frozen=True)
class PowerPoint:
    delta: float
    power: float
    std_err: float
    replications: int
    worst_power: float = float("nan")


@dataclass
class PowerCurve:
    deltas: list
    power: list
    std_err: list
    replications: list
    config_hash: str = ""
    worst_power: list = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.deltas) == len(self.power) == len(self.std_err) == len(self.replications)):
            raise ValueError("power curve columns differ in length")
        if any(not 0.0 <= p <= 1.0 for p in self.power):
            raise ValueError("power values must lie in [0, 1]")

    @classmethod
    def from_points(cls, points, config_hash: str = "") -> "PowerCurve":
        return cls(
            [p.delta for p in points],
            [p.power for p in points],
            [p.std_err for p in points],
            [p.replications for p in points],
            config_hash,
            [p.worst_power for p in points],
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", "power", "std_err", "replications"])
            for d, p, s, r in zip(self.deltas, self.power, self.std_err, self.replications):
                w.writerow([repr(float(d)), repr(float(p)), repr(float(s)), int(r)])

    def is_monotone(self, n_se: float = 2.0) -> bool:
        """Nondecreasing in ``delta`` up to ``n_se`` standard errors."""
        order = np.argsort(self.deltas)
        p = np.asarray(self.power)[order]
        s = np.asarray(self.std_err)[order]
        running = np.maximum.accumulate(p)
        return bool(np.all(p >= running - n_se * np.maximum(s, 1e-12)))


def _point(delta, rejects, worst=float("nan")) -> PowerPoint:
    R = rejects.size
    p = float(np.mean(rejects))
    return PowerPoint(float(delta), p, float(np.sqrt(p * (1 - p) / R)), int(R), worst)


def _noise_rows(seed, R, N, chol, field, threads=1):
    """Row ``r`` is ``chol @ z`` with ``z`` from stream ``(seed, r)``."""

    def block(rs):
        Z = np.stack([standard_noise(replication_rng(seed, r), N, field) for r in rs])
        return Z @ chol.T

    chunks = [range(a, min(a + 500, R)) for a in range(0, R, 500)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(block, chunks))
    else:
        parts = [block(c) for c in chunks]
    return np.concatenate(parts, axis=0)


class SupPairingSimulator:
    """Power of the sup test under ``f = delta u_k / ||A u_k||_n``, ``k`` cycled.

    The normalized pivots are ``delta / sigma * rho[k] + Z`` with
    ``Z ~ N(0, rho)`` (real) or ``rho^{1/2} (z1 + i z2)`` (complex), where
    ``rho`` is the correlation matrix of the images.
    """

    def __init__(self, system, sigma=1.0, alpha=0.05, field="real", replications=5000, seed=0, threads=1):
        self.sigma = float(sigma)
        self.alpha = float(alpha)
        self.field = ScalarField.coerce(field)
        G = gram(system, GramVariant.LAMBDA_TILDE).entries
        d = np.sqrt(np.real(np.diag(G)))
        self.rho = G / np.outer(d, d)
        N = self.rho.shape[0]
        self.N = N
        self.threshold = sup_threshold(N, self.alpha, self.field)
        # symmetric root: rho may be singular when images are linearly dependent
        evals, evecs = np.linalg.eigh(self.rho)
        root = evecs * np.sqrt(np.clip(evals, 0, None))
        self.Z = _noise_rows(seed, replications, N, root, self.field, threads)
        self.ks = np.arange(replications) % N

    def rejects(self, delta: float) -> np.ndarray:
        P = np.abs(delta / self.sigma * self.rho[self.ks] + self.Z)
        return P.max(axis=1) > self.threshold

    def power(self, delta: float) -> PowerPoint:
        rej = self.rejects(delta)
        per_k = np.array([rej[self.ks == k].mean() for k in range(self.N) if np.any(self.ks == k)])
        return _point(delta, rej, float(per_k.min()))


def sphere_coefficients(rng, lam, delta, field=ScalarField.REAL) -> np.ndarray:
    """``c`` with ``sum |lam_k c_k|^2 = delta^2`` and a rotation-invariant direction."""
    lam = np.asarray(lam, dtype=float)
    while True:
        g = standard_noise(rng, lam.size, field)
        nrm = np.sqrt(np.sum(np.abs(g) ** 2))
        if nrm > 0:
            return delta * g / (nrm * lam)


def sample_uniform_sphere_alternative(system, delta, seed=0, field=None):
    """Draw ``f = sum_k c_k u_k`` with ``c`` uniform on the lambda-weighted sphere of radius ``delta``."""
    if system.lam is None:
        raise ValueError("system has no quasi-singular values")
    field = system.field if field is None else ScalarField.coerce(field)
    c = sphere_coefficients(replication_rng(seed), system.lam, float(delta), field)
    return system.synthesize(c)


class Chi2PairingSimulator:
    """Power of the chi-squared test with ``f`` uniform on the lambda-weighted sphere.

    Pairings are ``B c + sigma W`` where ``B[k, k'] = <A u_k', v_k>_n`` and
    ``W ~ N(0, Xi)`` (real) or ``Xi^{1/2} (z1 + i z2)`` (complex).
    """

    def __init__(self, system, sigma=1.0, alpha=0.05, field="real", replications=5000, seed=0,
                 mc_draws=10**5, quantile_seed=None, threads=1):
        self.sigma = float(sigma)
        self.alpha = float(alpha)
        self.field = ScalarField.coerce(field)
        self.Xi = gram(system, GramVariant.XI)
        self.B = system.weight * (np.conj(system.vaguelettes) @ system.images.T)
        self.lam = system.lam
        self.N = system.N
        qseed = seed if quantile_seed is None else quantile_seed
        self.threshold = chi2_null_quantile(self.Xi, self.sigma, self.alpha, self.field, mc_draws, qseed)
        self.W = self.sigma * _noise_rows(seed, replications, self.N, self.Xi.cholesky, self.field, threads)
        # directions from a separate branch of each replication's stream
        G = np.stack([standard_noise(replication_rng(seed, r, 1), self.N, self.field) for r in range(replications)])
        self.dirs = G / np.sqrt(np.sum(np.abs(G) ** 2, axis=1, keepdims=True)) / self.lam
        self.signal_unit = self.dirs @ self.B.T

    def rejects(self, delta: float) -> np.ndarray:
        T = np.sum(np.abs(delta * self.signal_unit + self.W) ** 2, axis=1)
        return T > self.threshold

    def power(self, delta: float) -> PowerPoint:
        return _point(delta, self.rejects(delta))


class GridSimulator:
    """Power by simulating full observations on the output grid.

    ``test`` is ``'sup'`` (anomalies ``delta u_k / ||A u_k||``, ``k`` cycled)
    or ``'chi2'`` (uniform-sphere alternatives).  With ``route='apply'`` the
    forward operator is applied to the synthesized ``f``; with
    ``route='images'`` the image is assembled as ``sum c_k A u_k``.
    """

    def __init__(self, system, test="sup", sigma=1.0, alpha=0.05, field="real", replications=1000, seed=0,
                 mc_draws=10**5, route="apply"):
        self.system = system
        self.test = test
        self.sigma = float(sigma)
        self.field = ScalarField.coerce(field)
        self.R = int(replications)
        self.seed = seed
        self.route = route
        if test == "sup":
            self.estimator = SupTest(alpha, sigma, self.field.value).fit(system)
        elif test == "chi2":
            self.estimator = Chi2Test(alpha, sigma, self.field.value, mc_draws, seed).fit(system)
        else:
            raise ValueError(f"unknown test {test!r}")
        g = system.operator.output_grid
        self.scale = self.sigma * np.sqrt(g.n / g.volume)

    def _coefficients(self, r, delta):
        N = self.system.N
        if self.test == "sup":
            k = r % N
            c = np.zeros(N)
            nrm = np.sqrt(self.system.weight * np.sum(np.abs(self.system.images[k]) ** 2))
            c[k] = delta / nrm
            return c
        return sphere_coefficients(replication_rng(self.seed, r, 1), self.system.lam, delta, self.field)

    def observation(self, r, delta):
        c = self._coefficients(r, delta)
        if self.route == "apply":
            image = self.system.operator.apply(self.system.synthesize(c)).flat
        else:
            image = c @ self.system.images
        m = image.size
        return image + self.scale * standard_noise(replication_rng(self.seed, r, 2), m, self.field)

    def power(self, delta: float) -> PowerPoint:
        rej = np.array([self.estimator.predict(self.observation(r, delta)) for r in range(self.R)], dtype=bool)
        return _point(delta, rej)


class BracketError(RuntimeError):
    """No ``delta`` below the configured maximum reaches the target power."""


@dataclass(frozen=True)
class DeltaEstimate:
    delta: float
    std_err: float
    lo: float
    hi: float
    evaluations: tuple

    def as_dict(self) -> dict:
        return {"delta": self.delta, "std_err": self.std_err, "bracket": [self.lo, self.hi], "evaluations": len(self.evaluations)}


def find_delta_at_power(power_fn, target: float = 0.95, delta_hi: float = 1.0, delta_max: float = 1e4,
                        rel_tol: float = 1e-3, max_iter: int = 60) -> DeltaEstimate:
    """Bisection for the smallest ``delta`` with estimated power at least ``target``.

    ``power_fn(delta)`` returns a :class:`PowerPoint`.  With common random
    numbers the estimated power is (nearly) monotone in ``delta``, so the
    bracket shrinks to a well-defined crossing.  The reported standard error
    is the binomial error at the target divided by the local slope.
    """
    if not 0 < target < 1:
        raise ValueError("target power must lie in (0, 1)")
    evals = []

    def ev(d):
        p = power_fn(d)
        evals.append(p)
        return p.power

    lo, hi = 0.0, float(delta_hi)
    if ev(lo) >= target:
        return DeltaEstimate(0.0, 0.0, 0.0, 0.0, tuple(evals))
    while ev(hi) < target:
        lo, hi = hi, 2 * hi
        if hi > delta_max:
            raise BracketError(f"power stays below {target} up to delta = {delta_max}")
    for _ in range(max_iter):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if ev(mid) >= target:
            hi = mid
        else:
            lo = mid
    mid = 0.5 * (lo + hi)
    step = 0.05 * mid
    p_up, p_dn = power_fn(mid + step), power_fn(max(mid - step, 0.0))
    slope = (p_up.power - p_dn.power) / (p_up.delta - p_dn.delta)
    R = evals[-1].replications
    se_p = np.sqrt(target * (1 - target) / R)
    se = float(se_p / slope) if slope > 0 else float("inf")
    return DeltaEstimate(float(mid), se, float(lo), float(hi), tuple(evals))
