"""Anomaly systems ``u_k``, their images ``A u_k`` and vaguelette systems.

A :class:`DictionarySystem` stores everything on sample grids.  Images and
vaguelettes are dense ``(N, m)`` arrays over the flattened output grid, so
pairings with data are plain matrix products scaled by the grid weight.
Elements ``u_k`` on the input grid are produced on demand.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .operators import ConvolutionKernel, ForwardOperator, OperatorKind, _radon_values, ramp_filter, reflect_modes
from .sampling import Grid, SampledFunction, ScalarField, make_uniform_grid
from .wavelets import (
    Wavelet2DIndex,
    WaveletBasis1D,
    _EPS_PROFILES,
    build_index_set_interval,
    periodized_element,
    wavelet_element,
    wavelet_element_2d,
)

__all__ = [
    "DictionarySystem",
    "anomaly_system",
    "vaguelettes_integration",
    "vaguelettes_convolution",
    "vaguelettes_radon",
    "radon_images",
    "write_dictionary_csv",
    "write_values_csv",
]


@dataclass(eq=False)
class DictionarySystem:
    """Indexed family ``u_k`` with images and, optionally, vaguelettes.

    Parameters
    ----------
    operator : ForwardOperator
    index_set : list
        The candidate indices, in the order used by every array below.
    element_fn : callable
        ``k -> SampledFunction`` on ``operator.input_grid``.
    images : ndarray, shape (N, m)
        ``A u_k`` on the flattened output grid.
    vaguelettes : ndarray, shape (N, m), optional
        ``v_k`` with ``<A f, v_k> = lambda_k <f, u_k>``.
    lam : ndarray, shape (N,), optional
        Quasi-singular values ``lambda_k``.
    """

    operator: ForwardOperator
    index_set: list
    element_fn: Callable
    images: np.ndarray
    vaguelettes: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None
    field: ScalarField = ScalarField.REAL
    info: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.index_set = list(self.index_set)
        if len(self.index_set) == 0:
            raise ValueError("index set is empty")
        self.images = np.atleast_2d(np.asarray(self.images))
        m = self.operator.output_grid.n
        if self.images.shape != (self.N, m):
            raise ValueError(f"images must have shape {(self.N, m)}, got {self.images.shape}")
        if self.vaguelettes is not None:
            self.vaguelettes = np.atleast_2d(np.asarray(self.vaguelettes))
            if self.vaguelettes.shape != (self.N, m):
                raise ValueError("vaguelettes and images disagree in shape")
        if self.lam is not None:
            self.lam = np.asarray(self.lam, dtype=float).reshape(-1)
            if self.lam.size != self.N:
                raise ValueError("one lambda per index required")
            if np.any(self.lam == 0):
                raise ValueError("quasi-singular values must be nonzero")
        self.field = ScalarField.coerce(self.field)
        self._elements = None

    @property
    def N(self) -> int:
        return len(self.index_set)

    @property
    def weight(self) -> float:
        """Quadrature weight of the output grid."""
        return self.operator.output_grid.weight

    @property
    def vtilde(self) -> np.ndarray:
        """``lambda_k^{-1} A u_k``."""
        if self.lam is None:
            raise ValueError("system has no quasi-singular values")
        return self.images / self.lam[:, None]

    def element(self, i: int) -> SampledFunction:
        return self.element_fn(self.index_set[i])

    @property
    def elements(self) -> np.ndarray:
        """All ``u_k`` stacked as ``(N, n)``; materialized once."""
        if self._elements is None:
            self._elements = np.stack([self.element(i).flat for i in range(self.N)])
        return self._elements

    def synthesize(self, c) -> SampledFunction:
        """``f = sum_k c_k u_k`` on the input grid."""
        c = np.asarray(c).reshape(-1)
        if c.size != self.N:
            raise ValueError(f"need {self.N} coefficients, got {c.size}")
        if self._elements is not None:
            vals = c @ self._elements
        else:
            vals = sum(ck * self.element(i).values for i, ck in enumerate(c) if ck != 0)
            if np.isscalar(vals):
                vals = np.zeros(self.operator.input_grid.shape)
        return SampledFunction(self.operator.input_grid, vals)

    def pair(self, Y, which: str = "images") -> np.ndarray:
        """``<Y, w_k>_n`` for every ``k`` with ``w`` the images or vaguelettes.

        ``Y`` may be a :class:`SampledFunction` or an ``(R, m)`` batch.
        """
        W = self.images if which == "images" else self.vaguelettes
        if W is None:
            raise ValueError(f"system has no {which}")
        y = Y.flat if isinstance(Y, SampledFunction) else np.asarray(Y)
        return self.weight * (y @ np.conj(W).T)


def _element_factory(basis: WaveletBasis1D, grid: Grid, periodic: bool = False, kind: str = "psi"):
    def make(k):
        if isinstance(k, Wavelet2DIndex):
            return wavelet_element_2d(basis, k, grid)
        j, l = k
        if periodic:
            return periodized_element(basis, j, l, grid, kind)
        return wavelet_element(basis, j, l, grid, kind)

    return make


def anomaly_system(operator: ForwardOperator, basis: WaveletBasis1D, indices, periodic: bool = False) -> DictionarySystem:
    """Wavelet anomalies ``u_k`` with images ``A u_k``; no vaguelettes."""
    make = _element_factory(basis, operator.input_grid, periodic)
    indices = list(indices)
    if operator.kind is OperatorKind.RADON:
        images = radon_images(basis, indices, operator)
    else:
        U = np.stack([make(k).flat for k in indices])
        images = operator.apply_rows(U)
    system = DictionarySystem(operator, indices, make, images, info={"family": basis.family, "taps": basis.taps})
    if operator.kind is not OperatorKind.RADON:
        system._elements = U
    return system


def vaguelettes_integration(basis: WaveletBasis1D, indices=None, grid: Grid | None = None, j: int | None = None) -> DictionarySystem:
    """Vaguelettes of the antiderivative on ``[0, 1]``.

    ``v = -2^{j/2} psi'(2^j x - l)``, ``lambda = 2^{-j}``; ``psi'`` is a
    centered difference of the cascade samples.
    """
    if not basis.is_differentiable:
        raise ValueError(f"{basis.family} is not differentiable enough for integration vaguelettes")
    grid = make_uniform_grid(0.0, 1.0, 2**15) if grid is None else grid
    if indices is None:
        if j is None:
            raise ValueError("pass indices or a scale j")
        indices = build_index_set_interval(basis, j)
    op = ForwardOperator.integration(grid)
    system = anomaly_system(op, basis, indices)
    V = np.stack([-wavelet_element(basis, j_, l, grid, "dpsi").flat for j_, l in system.index_set])
    system.vaguelettes = V
    system.lam = np.array([2.0 ** -j_ for j_, _ in system.index_set])
    return system


def vaguelettes_convolution(kernel: ConvolutionKernel, basis: WaveletBasis1D, j: int, grid: Grid | None = None, indices=None) -> DictionarySystem:
    """Periodized wavelets with Fourier-domain vaguelettes for ``h_m = C |m|^{-a}``.

    With ``u_m`` the DFT coefficients of ``u_{j,k}``:
    ``v_m = lambda u_m / conj(h_{-m})`` and ``lambda = 2^{-ja} C``, so that
    ``<K f, v>_n = lambda <f, u>_n`` holds exactly on the grid.
    """
    if kernel.decay_params is None:
        raise ValueError("kernel has no (C, a) decay parameters")
    C, a = kernel.decay_params
    grid = make_uniform_grid(0.0, 1.0, 2**12) if grid is None else grid
    if indices is None:
        indices = [(j, k) for k in range(2**j)]
    op = ForwardOperator.periodic_convolution(grid, kernel)
    system = anomaly_system(op, basis, indices, periodic=True)
    n = grid.n
    hneg = reflect_modes(kernel.fourier(n))
    Um = np.fft.fft(system.elements, axis=1) / n
    lam = np.array([2.0 ** (-j_ * a) * C for j_, _ in system.index_set])
    need = np.abs(Um).max(axis=0) > 1e-14 * np.abs(Um).max()
    if np.any(hneg[need] == 0):
        raise ValueError("kernel has vanishing Fourier coefficients where the wavelets do not")
    Vm = np.zeros_like(Um)
    Vm[:, need] = lam[:, None] * Um[:, need] / np.conj(hneg[need])
    V = np.fft.ifft(Vm, axis=1) * n
    if not np.iscomplexobj(system.elements) and np.allclose(hneg, np.conj(reflect_modes(hneg))):
        V = V.real
    system.vaguelettes = V
    system.lam = lam
    system.info["fourier"] = True
    return system


def radon_images(basis: WaveletBasis1D, indices, operator: ForwardOperator, oversample: int = 4) -> np.ndarray:
    """Sinograms of the 2-D wavelets ``eta_{j,l}^eps`` by translation.

    One reference sinogram per ``(j, eps)`` is computed for ``l = 0`` on a
    ``t``-grid ``oversample`` times finer than the output one.  Translating
    the element by ``c = l / 2^j`` shifts each projection to
    ``t - <c, e_theta>``, evaluated by linear interpolation in ``t``.
    """
    g = operator.input_grid
    h = g.spacing[0]
    t = operator.params["t_grid"].axes[0]
    theta = operator.params["theta_grid"].axes[0]
    dt = operator.params["t_grid"].spacing[0] if t.size > 1 else h
    dtau = min(dt, h) / oversample
    L = basis.support_length
    out = np.zeros((len(indices), t.size, theta.size))
    groups = {}
    for i, k in enumerate(indices):
        groups.setdefault((k.j, k.eps), []).append(i)
    for (j, eps), rows in groups.items():
        s = 2.0**j
        # reference element sampled at pixel positions i * h of its support box
        xs = np.arange(int(np.ceil(L / s / h)) + 2) * h
        if min(g.spacing) * 4 > L / s:
            raise ValueError(f"scale j={j} is under-resolved on the image grid")
        a, b = _EPS_PROFILES[eps]
        img = s * np.outer(basis.evaluate(s * xs, a), basis.evaluate(s * xs, b))
        T = xs[-1] * np.sqrt(2) + 2 * h
        tau = np.arange(-int(np.ceil(T / dtau)), int(np.ceil(T / dtau)) + 1) * dtau
        ref = _radon_values(img, (0.0, 0.0), h, tau, theta)
        shifts = np.array([indices[i].l for i in rows], dtype=float) / s
        for ia, th in enumerate(theta):
            proj = shifts[:, 0] * np.cos(th) + shifts[:, 1] * np.sin(th)
            pos = (t[None, :] - proj[:, None] - tau[0]) / dtau
            i0 = np.floor(pos).astype(int)
            w = pos - i0
            ok = (i0 >= 0) & (i0 < tau.size - 1)
            i0c = np.clip(i0, 0, tau.size - 2)
            col = ref[:, ia]
            vals = (1 - w) * col[i0c] + w * col[i0c + 1]
            out[rows, :, ia] = np.where(ok, vals, 0.0)
    return out.reshape(len(indices), -1)


def vaguelettes_radon(basis: WaveletBasis1D, indices, operator: ForwardOperator, oversample: int = 4) -> DictionarySystem:
    """Radon vaguelettes ``v = 2^{-j/2} R omega`` with ``lambda = 2^{-j/2}``.

    ``omega`` is ``eta`` under the multiplier ``|xi| / (2 pi)``; by the Fourier
    slice theorem ``R omega`` is the ramp-filtered sinogram of ``eta``, which
    is how it is computed here.
    """
    if operator.kind is not OperatorKind.RADON:
        raise ValueError("vaguelettes_radon needs a Radon operator")
    indices = [Wavelet2DIndex(*k).validate() if not isinstance(k, Wavelet2DIndex) else k.validate() for k in indices]
    g = operator.input_grid
    lo, hi = g.axes[0][0], g.axes[0][-1] + g.spacing[0]
    for k in indices:
        for c in k.l:
            if c / 2.0**k.j < lo - 1e-12 or (c + basis.support_length) / 2.0**k.j > hi + 1e-12:
                raise ValueError(f"index {k} is not supported inside the image domain")
    images = radon_images(basis, indices, operator, oversample)
    t_grid = operator.params["t_grid"]
    nt, nth = t_grid.n, operator.params["theta_grid"].n
    lam = np.array([2.0 ** (-k.j / 2) for k in indices])
    V = np.empty_like(images)
    for start in range(0, len(indices), 128):
        block = images[start : start + 128].reshape(-1, nt, nth)
        V[start : start + 128] = ramp_filter(block, t_grid.spacing[0], axis=1).reshape(block.shape[0], -1)
    V *= lam[:, None]
    make = _element_factory(basis, g)
    return DictionarySystem(operator, indices, make, images, V, lam, info={"family": basis.family, "taps": basis.taps})


def _index_columns(k) -> list:
    if isinstance(k, Wavelet2DIndex):
        return [k.j, k.l[0], k.l[1], k.eps]
    return list(k)


def write_dictionary_csv(path, system: DictionarySystem):
    """One row per index: index columns, ``lambda``, ``||A u_k||_n``."""
    first = system.index_set[0]
    head = ["j", "l1", "l2", "eps"] if isinstance(first, Wavelet2DIndex) else ["j", "l"][: len(first)]
    norms = np.sqrt(np.sum(np.abs(system.images) ** 2, axis=1) * system.weight)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head + ["lambda", "image_norm"])
        for i, k in enumerate(system.index_set):
            lam = "" if system.lam is None else repr(float(system.lam[i]))
            w.writerow(_index_columns(k) + [lam, repr(float(norms[i]))])


def write_values_csv(path, system: DictionarySystem, which: str = "images"):
    """Sample values, one row per index; ``which`` is images, vaguelettes or elements."""
    rows = {"images": system.images, "vaguelettes": system.vaguelettes, "elements": None}[which]
    if which == "elements":
        rows = system.elements
    if rows is None:
        raise ValueError(f"system has no {which}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for r in np.real_if_close(rows):
            w.writerow([repr(v.item()) for v in r])
