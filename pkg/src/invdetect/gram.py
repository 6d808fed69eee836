"""Gram matrices, spectra, Frobenius norms and image-coherence counts."""

from __future__ import annotations

import csv
import enum
import itertools
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GramVariant",
    "GramMatrix",
    "NotPositiveDefinite",
    "CoherenceReport",
    "gram",
    "gram_from_vectors",
    "frobenius",
    "frobenius_inverse",
    "riesz_bounds",
    "positive_pairs",
    "greedy_negative_corr_subset",
    "exact_negative_corr_subset",
    "coherence",
    "PD_TOL",
]

PD_TOL = 1e-10
# relative floor below which a normalized correlation counts as zero
CORR_TOL = 1e-10


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a Gram matrix fails the relative eigenvalue floor."""

    def __init__(self, message: str, variant: str = "", min_eig: float = float("nan")):
        super().__init__(message)
        self.variant = variant
        self.min_eig = min_eig


class GramVariant(enum.Enum):
    XI = "Xi"
    XI_TILDE = "XiTilde"
    LAMBDA_TILDE = "LambdaTilde"


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Hermitian matrix of pairwise ``<.,.>_n`` products with cached spectrum."""

    entries: np.ndarray
    variant: GramVariant
    index_set: tuple = ()

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.entries))
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.all(np.isfinite(G)):
            raise ValueError("Gram matrix has non-finite entries")
        scale = max(np.max(np.abs(G)), 1e-300)
        if np.max(np.abs(G - G.conj().T)) > 1e-12 * scale:
            raise ValueError("Gram matrix is not Hermitian")
        G = (G + G.conj().T) / 2
        G.setflags(write=False)
        object.__setattr__(self, "entries", G)
        object.__setattr__(self, "variant", GramVariant(self.variant))
        object.__setattr__(self, "index_set", tuple(self.index_set))

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Real eigenvalues in nonincreasing order."""
        return np.linalg.eigvalsh(self.entries)[::-1]

    def check_positive_definite(self, tol: float = PD_TOL):
        s = self.eigenvalues
        if s[0] <= 0 or s[-1] <= tol * s[0]:
            raise NotPositiveDefinite(
                f"{self.variant.value} Gram matrix is not positive definite "
                f"(min eigenvalue {s[-1]:.3g}, max {s[0]:.3g}, relative floor {tol:g})",
                self.variant.value,
                float(s[-1]),
            )

    @cached_property
    def cholesky(self) -> np.ndarray:
        self.check_positive_definite()
        return np.linalg.cholesky(self.entries)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in np.real_if_close(self.entries):
                w.writerow([repr(v.item()) for v in row])

    def spectrum_json(self, path=None) -> str:
        text = json.dumps({"variant": self.variant.value, "eigenvalues": [float(v) for v in self.eigenvalues]})
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def gram_from_vectors(W: np.ndarray, weight: float, variant=GramVariant.XI, index_set=()) -> GramMatrix:
    """``G_{kk'} = weight * sum_s W_k[s] conj(W_k'[s])``."""
    W = np.atleast_2d(np.asarray(W))
    return GramMatrix(weight * (W @ np.conj(W).T), variant, index_set)


def gram(system, variant=GramVariant.XI) -> GramMatrix:
    """Gram matrix of a :class:`~invdetect.dictionaries.DictionarySystem`."""
    variant = GramVariant(variant)
    if variant is GramVariant.XI:
        W = system.vaguelettes
    elif variant is GramVariant.XI_TILDE:
        W = system.vtilde if system.lam is not None else None
    else:
        W = system.images
    if W is None:
        raise ValueError(f"system lacks the vectors for the {variant.value} Gram matrix")
    return gram_from_vectors(W, system.weight, variant, system.index_set)


def _entries(M) -> np.ndarray:
    return M.entries if isinstance(M, GramMatrix) else np.asarray(M)


def frobenius(M) -> float:
    return float(np.sqrt(np.sum(np.abs(_entries(M)) ** 2)))


def frobenius_inverse(M: GramMatrix, tol: float = PD_TOL) -> float:
    """``||M^{-1}||_F`` from the spectrum; requires positive definiteness."""
    if not isinstance(M, GramMatrix):
        M = GramMatrix(M, GramVariant.XI_TILDE)
    M.check_positive_definite(tol)
    return float(np.sqrt(np.sum(M.eigenvalues ** -2.0)))


def riesz_bounds(G) -> tuple:
    """Finite-section Riesz constants ``(min eigenvalue, max eigenvalue)``."""
    s = G.eigenvalues if isinstance(G, GramMatrix) else np.linalg.eigvalsh(np.asarray(G))[::-1]
    return float(s[-1]), float(s[0])


def _correlation(images, weight: float = 1.0) -> np.ndarray:
    if isinstance(images, GramMatrix):
        G = images.entries
    else:
        X = np.atleast_2d(np.asarray(images))
        G = weight * (X @ np.conj(X).T)
    d = np.sqrt(np.real(np.diag(G)))
    if np.any(d == 0):
        raise ValueError("zero-norm image")
    return np.real(G) / np.outer(d, d)


def positive_pairs(images, weight: float = 1.0, tol: float = CORR_TOL) -> np.ndarray:
    """Boolean matrix of pairs with positive real correlation.

    The diagonal is always set.  Off the diagonal a pair counts when its
    normalized correlation exceeds ``tol``; exactly orthogonal images (for
    example disjoint supports) therefore do not count.
    """
    rho = _correlation(images, weight)
    P = rho > tol
    np.fill_diagonal(P, True)
    return P


def greedy_negative_corr_subset(images, weight: float = 1.0, tol: float = CORR_TOL):
    """Greedy elimination: keep an index, discard all positively correlated ones.

    Returns ``(subset, size)``; the subset has pairwise nonpositive real
    correlations, so its size lower-bounds the maximum such subset.
    """
    P = positive_pairs(images, weight, tol)
    alive = np.ones(P.shape[0], dtype=bool)
    keep = []
    for k in range(P.shape[0]):
        if alive[k]:
            keep.append(k)
            alive &= ~P[k]
    return keep, len(keep)


def exact_negative_corr_subset(images, weight: float = 1.0, tol: float = CORR_TOL, max_n: int = 20):
    """Largest subset with pairwise nonpositive correlation, by enumeration."""
    P = positive_pairs(images, weight, tol)
    N = P.shape[0]
    if N > max_n:
        raise ValueError(f"exhaustive search limited to N <= {max_n}, got {N}")
    off = P & ~np.eye(N, dtype=bool)
    for size in range(N, 0, -1):
        for cand in itertools.combinations(range(N), size):
            idx = np.array(cand)
            if not off[np.ix_(idx, idx)].any():
                return list(cand), size
    return [], 0


@dataclass(frozen=True)
class CoherenceReport:
    M_sigma: int
    N_star_lower: int
    max_offdiag_corr: float
    min_selfcorr: float
    N: int

    def __post_init__(self):
        if not (1 <= self.N_star_lower <= self.N and self.M_sigma >= 1):
            raise ValueError("inconsistent coherence report")


def coherence(images, weight: float = 1.0, tol: float = CORR_TOL) -> CoherenceReport:
    """``M_sigma`` (largest row count of positive pairs, self included) and friends."""
    rho = _correlation(images, weight)
    P = positive_pairs(images, weight, tol)
    N = rho.shape[0]
    off = rho[~np.eye(N, dtype=bool)]
    _, nstar = greedy_negative_corr_subset(images, weight, tol)
    return CoherenceReport(
        M_sigma=int(P.sum(axis=1).max()),
        N_star_lower=nstar,
        max_offdiag_corr=float(off.max()) if off.size else 0.0,
        min_selfcorr=float(np.diag(rho).min()),
        N=N,
    )
