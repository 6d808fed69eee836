"""Daubechies scaling functions and wavelets by the cascade algorithm.

Filters come from spectral factorization of the Daubechies polynomial
(extremal phase).  ``taps`` counts filter coefficients, so ``db6`` in the
vanishing-moment naming is ``taps=12`` here.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .sampling import Grid, SampledFunction, make_uniform_grid

__all__ = [
    "daubechies_filter",
    "WaveletBasis1D",
    "daubechies_cascade",
    "wavelet_element",
    "periodized_element",
    "Wavelet2DIndex",
    "wavelet_element_2d",
    "build_index_set_interval",
    "build_index_set_square_2d",
    "taps_from_name",
]

_PROFILES = ("phi", "psi", "dpsi", "ipsi")


def taps_from_name(name: str) -> int:
    """``'db6'`` -> 12, ``'haar'`` -> 2."""
    key = name.strip().lower()
    if key == "haar":
        return 2
    if key.startswith("db") and key[2:].isdigit():
        return 2 * int(key[2:])
    raise ValueError(f"unknown wavelet family {name!r}; expected 'haar' or 'dbN'")


def daubechies_filter(taps: int) -> np.ndarray:
    """Extremal-phase Daubechies low-pass filter with ``sum(h) = sqrt(2)``."""
    if int(taps) != taps or taps < 2 or taps > 20 or taps % 2:
        raise ValueError(f"unsupported number of taps {taps}; need an even integer in 2..20")
    p = int(taps) // 2
    # P(y) = sum_k C(p-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z) / 4
    q = np.array([comb(p - 1 + k, k) for k in range(p)], dtype=float)
    poly = np.array([1.0 + 0j])
    for y in np.roots(q[::-1]):
        b = 2 - 4 * y
        disc = np.sqrt(b * b - 4 + 0j)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        poly = np.convolve(poly, [1, -(z1 if abs(z1) < 1 else z2)])
    for _ in range(p):
        poly = np.convolve(poly, [1, 1])
    h = np.real(poly)
    return h / h.sum() * np.sqrt(2)


def _cascade(h: np.ndarray, levels: int):
    N = len(h)
    L = N - 1
    # integer samples: eigenvector of M_ij = sqrt(2) h_{2i-j} for eigenvalue 1
    M = np.zeros((L + 1, L + 1))
    for i in range(L + 1):
        for k in range(N):
            j = 2 * i - k
            if 0 <= j <= L:
                M[i, j] += np.sqrt(2) * h[k]
    w, V = np.linalg.eig(M)
    phi = np.real(V[:, np.argmin(np.abs(w - 1))])
    phi = phi / phi.sum()
    for r in range(1, levels + 1):
        half = 2 ** (r - 1)
        i = np.arange(L * 2**r + 1)
        new = np.zeros(i.size)
        for k in range(N):
            j = i - k * half
            ok = (j >= 0) & (j < phi.size)
            new[ok] += np.sqrt(2) * h[k] * phi[j[ok]]
        phi = new
    g = np.array([(-1) ** k * h[N - 1 - k] for k in range(N)])
    i = np.arange(L * 2**levels + 1)
    psi = np.zeros(i.size)
    for k in range(N):
        j = 2 * i - k * 2**levels
        ok = (j >= 0) & (j < phi.size)
        psi[ok] += np.sqrt(2) * g[k] * phi[j[ok]]
    return phi, psi


@dataclass(frozen=True, eq=False)
class WaveletBasis1D:
    """Sampled scaling function and wavelet, both supported on ``[0, L]``.

    ``phi`` and ``psi`` are :class:`SampledFunction` objects on the dyadic grid
    ``i / 2**levels`` of ``[0, L)``; the right endpoint (where both vanish for
    ``taps >= 4``) is kept internally for interpolation.
    """

    taps: int
    levels: int
    filter: np.ndarray
    phi_samples: np.ndarray
    psi_samples: np.ndarray

    @property
    def family(self) -> str:
        return "haar" if self.taps == 2 else f"db{self.taps // 2}"

    @property
    def support_length(self) -> int:
        return self.taps - 1

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.levels

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.phi_samples.size) * self.resolution

    @property
    def sample_grid(self) -> Grid:
        L = self.support_length
        return make_uniform_grid(0.0, float(L), L * 2**self.levels)

    @property
    def phi(self) -> SampledFunction:
        return SampledFunction(self.sample_grid, self.phi_samples[:-1])

    @property
    def psi(self) -> SampledFunction:
        return SampledFunction(self.sample_grid, self.psi_samples[:-1])

    @property
    def is_differentiable(self) -> bool:
        # db2 is only Hoelder-0.55; a centered difference of it is noise
        return self.taps >= 6

    def profile(self, kind: str) -> np.ndarray:
        """Samples of ``phi``, ``psi``, ``psi'`` or the antiderivative of ``psi``."""
        if kind == "phi":
            return self.phi_samples
        if kind == "psi":
            return self.psi_samples
        if kind == "dpsi":
            return np.gradient(self.psi_samples, self.resolution)
        if kind == "ipsi":
            out = np.zeros_like(self.psi_samples)
            out[1:] = np.cumsum(self.psi_samples[:-1]) * self.resolution
            return out
        raise ValueError(f"unknown profile {kind!r}; expected one of {_PROFILES}")

    def evaluate(self, x, kind: str = "psi") -> np.ndarray:
        """Piecewise-linear interpolation of the profile, zero off ``[0, L]``."""
        return np.interp(np.asarray(x, float), self.nodes, self.profile(kind), left=0.0, right=0.0)


def daubechies_cascade(taps: int, levels: int = 12) -> WaveletBasis1D:
    if int(levels) != levels or levels < 6:
        raise ValueError(f"levels must be an integer >= 6, got {levels}")
    h = daubechies_filter(taps)
    phi, psi = _cascade(h, int(levels))
    for a in (phi, psi):
        a.setflags(write=False)
    return WaveletBasis1D(int(taps), int(levels), h, phi, psi)


def _check_resolved(basis: WaveletBasis1D, j: int, h: float):
    width = basis.support_length / 2.0**j
    if width / h < 4:
        raise ValueError(
            f"scale j={j} is under-resolved: support {width:.3g} covers {width / h:.2f} samples (< 4)"
        )


def wavelet_element(basis: WaveletBasis1D, j: int, l: int, grid: Grid, kind: str = "psi") -> SampledFunction:
    """Samples of ``2^{j/2} g(2^j x - l)`` with ``g`` the chosen profile."""
    if grid.ndim != 1 or not grid.is_uniform:
        raise ValueError("wavelet elements need a uniform 1-D grid")
    if grid.n > 1:
        _check_resolved(basis, j, grid.spacing[0])
    x = grid.axes[0]
    return SampledFunction(grid, 2.0 ** (j / 2) * basis.evaluate(2.0**j * x - l, kind))


def periodized_element(basis: WaveletBasis1D, j: int, l: int, grid: Grid, kind: str = "psi") -> SampledFunction:
    """1-periodic ``sum_z 2^{j/2} g(2^j (x + z) - l)`` on a grid over ``[0, 1)``."""
    if grid.ndim != 1 or not grid.is_uniform:
        raise ValueError("wavelet elements need a uniform 1-D grid")
    _check_resolved(basis, j, grid.spacing[0])
    x = grid.axes[0]
    L = basis.support_length
    lo = int(np.floor((l - 2.0**j * x.max()) / 2.0**j)) - 1
    hi = int(np.ceil((l + L - 2.0**j * x.min()) / 2.0**j)) + 1
    out = np.zeros(x.size)
    for z in range(lo, hi + 1):
        out += basis.evaluate(2.0**j * (x + z) - l, kind)
    return SampledFunction(grid, 2.0 ** (j / 2) * out)


class Wavelet2DIndex(NamedTuple):
    """Tensor wavelet ``2^j a(2^j x1 - l1) b(2^j x2 - l2)``.

    ``eps = 1`` uses ``(psi, phi)``, ``eps = 2`` uses ``(phi, psi)`` and
    ``eps = 3`` uses ``(psi, psi)``.
    """

    j: int
    l: tuple
    eps: int

    def validate(self):
        if self.eps not in (1, 2, 3):
            raise ValueError(f"eps must be 1, 2 or 3, got {self.eps}")
        return self


_EPS_PROFILES = {1: ("psi", "phi"), 2: ("phi", "psi"), 3: ("psi", "psi")}


def wavelet_element_2d(basis: WaveletBasis1D, idx: Wavelet2DIndex, grid: Grid) -> SampledFunction:
    idx.validate()
    if grid.ndim != 2 or not grid.is_uniform:
        raise ValueError("2-D wavelet elements need a uniform 2-D grid")
    _check_resolved(basis, idx.j, max(grid.spacing))
    a, b = _EPS_PROFILES[idx.eps]
    s = 2.0**idx.j
    f1 = basis.evaluate(s * grid.axes[0] - idx.l[0], a)
    f2 = basis.evaluate(s * grid.axes[1] - idx.l[1], b)
    return SampledFunction(grid, s * np.outer(f1, f2))


def _translations(L: int, j: int, a: float, b: float) -> range:
    s = 2.0**j
    return range(int(np.ceil(a * s - 1e-9)), int(np.floor(b * s - L + 1e-9)) + 1)


def build_index_set_interval(basis: WaveletBasis1D, j: int, a: float = 0.0, b: float = 1.0) -> list:
    """All ``(j, l)`` with ``[l, l + L] / 2^j`` inside ``[a, b]``."""
    ls = _translations(basis.support_length, j, a, b)
    if len(ls) == 0:
        raise ValueError(f"no translate of the j={j} wavelet fits in [{a}, {b}]")
    return [(int(j), l) for l in ls]


def build_index_set_square_2d(basis: WaveletBasis1D, j: int, a: float = -0.5, b: float = 0.5) -> list:
    """Tensor wavelets of types 1..3 whose support lies in ``[a, b]^2``."""
    ls = _translations(basis.support_length, j, a, b)
    if len(ls) == 0:
        raise ValueError(f"no translate of the j={j} wavelet fits in [{a}, {b}]^2")
    return [Wavelet2DIndex(int(j), (l1, l2), eps) for eps in (1, 2, 3) for l1 in ls for l2 in ls]
