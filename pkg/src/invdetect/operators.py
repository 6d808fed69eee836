"""Discretized forward maps: integration, periodic convolution, Radon transform."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.ndimage import map_coordinates

from .sampling import Grid, GridMismatchError, SampledFunction, product_grid

__all__ = [
    "OperatorKind",
    "ConvolutionKernel",
    "ForwardOperator",
    "integrate_forward",
    "convolve_periodic",
    "radon_forward",
    "ramp_filter",
    "reflect_modes",
    "apply",
    "write_sinogram_csv",
]


class OperatorKind(enum.Enum):
    INTEGRATION = "integration"
    PERIODIC_CONVOLUTION = "periodic_convolution"
    RADON = "radon"


def _fft_modes(n: int) -> np.ndarray:
    """Integer frequencies in FFT order for a length-``n`` periodic grid."""
    return np.fft.fftfreq(n, d=1.0 / n).round().astype(int)


@dataclass(frozen=True)
class ConvolutionKernel:
    """A 1-periodic kernel ``h`` given by Fourier coefficients and/or samples.

    Parameters
    ----------
    coefficients : callable, optional
        Maps an integer array ``m`` to the Fourier coefficients ``h_m`` with
        ``h(x) = sum_m h_m exp(2 pi i m x)``.
    samples : array, optional
        Values ``h(i / n)``, ``i = 0..n-1``.
    decay_params : (C, a), optional
        Set when ``h_m = C |m|^(-a)``; used by the vaguelette construction.
    """

    coefficients: Optional[Callable] = None
    samples: Optional[np.ndarray] = None
    decay_params: Optional[tuple] = None
    name: str = "kernel"

    def __post_init__(self):
        if self.coefficients is None and self.samples is None:
            raise ValueError("kernel needs Fourier coefficients or samples")
        if self.coefficients is not None and self.samples is not None:
            n = len(self.samples)
            from_samples = np.fft.fft(np.asarray(self.samples)) / n
            direct = np.asarray(self.coefficients(_fft_modes(n)), dtype=complex)
            if np.max(np.abs(from_samples - direct)) > 1e-10 * max(1.0, np.max(np.abs(direct))):
                raise ValueError("kernel samples and Fourier coefficients disagree")

    @classmethod
    def power_decay(cls, C: float = 1.0, a: float = 1.0) -> "ConvolutionKernel":
        """``h_m = C |m|^(-a)`` for ``m != 0`` and ``h_0 = C``."""
        if C == 0:
            raise ValueError("C must be nonzero")

        def coeffs(m):
            m = np.abs(np.asarray(m, dtype=float))
            out = np.full(m.shape, float(C))
            nz = m > 0
            out[nz] = C * m[nz] ** (-float(a))
            return out

        return cls(coefficients=coeffs, decay_params=(float(C), float(a)), name=f"power_decay(C={C}, a={a})")

    @classmethod
    def periodic_gaussian(cls, width: float) -> "ConvolutionKernel":
        """Periodized Gaussian density with standard deviation ``width``."""
        if not width > 0:
            raise ValueError("width must be positive")

        def coeffs(m):
            m = np.asarray(m, dtype=float)
            return np.exp(-2.0 * (np.pi * m * width) ** 2)

        return cls(coefficients=coeffs, name=f"periodic_gaussian(width={width})")

    @classmethod
    def from_samples(cls, samples) -> "ConvolutionKernel":
        return cls(samples=np.asarray(samples))

    def fourier(self, n: int) -> np.ndarray:
        """Coefficients ``h_m`` for the FFT modes of an ``n``-point grid."""
        if self.coefficients is not None:
            return np.asarray(self.coefficients(_fft_modes(n)), dtype=complex)
        if len(self.samples) != n:
            raise GridMismatchError(f"kernel sampled on {len(self.samples)} points, signal on {n}")
        return np.fft.fft(np.asarray(self.samples)) / n

    def is_flat(self, n: int) -> bool:
        """True if ``h'`` vanishes, i.e. only ``h_0`` is nonzero."""
        hm = self.fourier(n)
        return bool(np.all(np.abs(hm[1:]) <= 1e-14 * max(abs(hm[0]), 1e-300)))


def _require_uniform_1d(grid: Grid):
    if grid.ndim != 1 or not grid.is_uniform:
        raise ValueError("operator needs a uniform 1-D grid")


def _integrate_rows(values: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(values)
    np.cumsum(values[..., :-1], axis=-1, out=out[..., 1:])
    return out * dx


def integrate_forward(f: SampledFunction) -> SampledFunction:
    """Antiderivative ``int_{-inf}^x f`` with ``f`` zero left of the grid.

    Uses exclusive left-Riemann sums, so the discrete map is strictly lower
    triangular: ``(Af)_i = dx * sum_{m < i} f_m``.
    """
    _require_uniform_1d(f.grid)
    dx = f.grid.volume / f.grid.n
    return SampledFunction(f.grid, _integrate_rows(f.values, dx))


def reflect_modes(hm: np.ndarray) -> np.ndarray:
    """``m -> h_{-m}`` for coefficients stored in FFT order."""
    return hm[(-np.arange(hm.size)) % hm.size]


def _convolve_rows(values: np.ndarray, hm: np.ndarray) -> np.ndarray:
    # (Kf)_m = h_{-m} f_m for (Kf)(x) = int h(u - x) f(u) du
    mult = reflect_modes(hm)
    out = np.fft.ifft(np.fft.fft(values, axis=-1) * mult, axis=-1)
    if not np.iscomplexobj(values) and np.allclose(hm, np.conj(mult)):
        return out.real
    return out


def convolve_periodic(k: ConvolutionKernel, f: SampledFunction) -> SampledFunction:
    """Periodic correlation ``(Kf)(x) = int_0^1 h(u - x) f(u) du`` via FFT."""
    _require_uniform_1d(f.grid)
    if not np.isclose(f.grid.volume, 1.0):
        raise ValueError("periodic convolution expects a grid over [0, 1)")
    hm = k.fourier(f.grid.n)
    return SampledFunction(f.grid, _convolve_rows(f.values, hm))


def _disc_radius(grid: Grid) -> float:
    (x, y) = grid.axes
    hx, hy = grid.spacing
    xs = np.array([x[0], x[-1] + hx])
    ys = np.array([y[0], y[-1] + hy])
    return float(np.sqrt(np.max(np.abs(xs)) ** 2 + np.max(np.abs(ys)) ** 2))


def _radon_values(img: np.ndarray, x0: tuple, h: float, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Line integrals of the bilinear interpolant of ``img``; shape ``(t, theta)``."""
    out = np.zeros((t.size, theta.size))
    nz = np.nonzero(img)
    if nz[0].size == 0:
        return out
    # bounding box of the support, one pixel of margin for the interpolant
    lo1, hi1 = x0[0] + (nz[0].min() - 1) * h, x0[0] + (nz[0].max() + 1) * h
    lo2, hi2 = x0[1] + (nz[1].min() - 1) * h, x0[1] + (nz[1].max() + 1) * h
    cx = np.array([lo1, lo1, hi1, hi1])
    cy = np.array([lo2, hi2, lo2, hi2])
    for a, th in enumerate(theta):
        c, s = np.cos(th), np.sin(th)
        tp = cx * c + cy * s
        sp = -cx * s + cy * c
        sel = np.nonzero((t >= tp.min()) & (t <= tp.max()))[0]
        if sel.size == 0:
            continue
        ks = np.arange(np.floor(sp.min() / h), np.ceil(sp.max() / h) + 1)
        sv = ks * h
        tt = t[sel][:, None]
        x1 = tt * c - sv[None, :] * s
        x2 = tt * s + sv[None, :] * c
        vals = map_coordinates(img, [(x1 - x0[0]) / h, (x2 - x0[1]) / h], order=1, mode="constant", cval=0.0)
        out[sel, a] = vals.sum(axis=1) * h
    return out


def radon_forward(image: SampledFunction, t_grid: Grid, theta_grid: Grid, radius: float | None = None) -> SampledFunction:
    """Sinogram ``(Rf)(t, theta) = int f(t e_theta + s e_theta_perp) ds``.

    ``e_theta = (cos theta, sin theta)``.  Each line is sampled with step equal
    to the pixel width and the image is read through bilinear interpolation.
    The result lives on ``t_grid x theta_grid`` (rows ``t``, columns ``theta``).
    """
    g = image.grid
    if g.ndim != 2 or not g.is_uniform or not np.isclose(g.spacing[0], g.spacing[1]):
        raise ValueError("Radon transform needs a uniform square-pixel 2-D grid")
    if theta_grid.n == 0:
        raise ValueError("empty angle grid")
    if t_grid.ndim != 1 or theta_grid.ndim != 1:
        raise ValueError("t and theta grids must be 1-D")
    R = _disc_radius(g) if radius is None else float(radius)
    t = t_grid.axes[0]
    if np.max(np.abs(t)) > R * (1 + 1e-12):
        raise ValueError(f"t values exceed the support disc radius {R:.6g}")
    if np.iscomplexobj(image.values):
        raise ValueError("Radon transform implemented for real images")
    h = g.spacing[0]
    vals = _radon_values(np.asarray(image.values, float), (g.axes[0][0], g.axes[1][0]), h, t, theta_grid.axes[0])
    return SampledFunction(product_grid(t_grid, theta_grid), vals)


def ramp_filter(sinogram: np.ndarray, dt: float, axis: int = 0) -> np.ndarray:
    """Apply the band-limited ramp ``|nu|`` (cycles per unit) along ``axis``.

    Discrete convolution with the Ram-Lak kernel ``k(0) = 1/(4 dt^2)``,
    ``k(odd m) = -1/(pi m dt)^2``, zero otherwise, on a zero-padded line.
    Equivalent to the Fourier multiplier ``|xi| / (2 pi)`` in angular frequency.
    """
    x = np.moveaxis(np.asarray(sinogram, dtype=float), axis, 0)
    nt = x.shape[0]
    M = 1
    while M < 2 * nt:
        M *= 2
    m = _fft_modes(M)
    ker = np.zeros(M)
    ker[m == 0] = 1.0 / (4 * dt * dt)
    odd = (m % 2) != 0
    ker[odd] = -1.0 / (np.pi * m[odd] * dt) ** 2
    pad = np.zeros((M,) + x.shape[1:])
    pad[:nt] = x
    resp = np.fft.rfft(ker).real
    out = np.fft.irfft(np.fft.rfft(pad, axis=0) * resp.reshape((-1,) + (1,) * (x.ndim - 1)), n=M, axis=0)[:nt] * dt
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    """A named discretized linear map from ``input_grid`` to ``output_grid``."""

    kind: OperatorKind
    input_grid: Grid
    output_grid: Grid
    params: dict = field(default_factory=dict)

    @classmethod
    def integration(cls, grid: Grid) -> "ForwardOperator":
        _require_uniform_1d(grid)
        return cls(OperatorKind.INTEGRATION, grid, grid)

    @classmethod
    def periodic_convolution(cls, grid: Grid, kernel: ConvolutionKernel) -> "ForwardOperator":
        _require_uniform_1d(grid)
        return cls(OperatorKind.PERIODIC_CONVOLUTION, grid, grid, {"kernel": kernel})

    @classmethod
    def radon(cls, image_grid: Grid, t_grid: Grid, theta_grid: Grid, radius: float | None = None) -> "ForwardOperator":
        R = _disc_radius(image_grid) if radius is None else float(radius)
        if np.max(np.abs(t_grid.axes[0])) > R * (1 + 1e-12):
            raise ValueError(f"t values exceed the support disc radius {R:.6g}")
        return cls(
            OperatorKind.RADON,
            image_grid,
            product_grid(t_grid, theta_grid),
            {"t_grid": t_grid, "theta_grid": theta_grid, "radius": R},
        )

    def apply(self, f: SampledFunction) -> SampledFunction:
        if not f.grid.same_as(self.input_grid):
            raise GridMismatchError("signal does not live on the operator's input grid")
        if self.kind is OperatorKind.INTEGRATION:
            return integrate_forward(f)
        if self.kind is OperatorKind.PERIODIC_CONVOLUTION:
            return convolve_periodic(self.params["kernel"], f)
        return radon_forward(f, self.params["t_grid"], self.params["theta_grid"], self.params["radius"])

    def apply_rows(self, X: np.ndarray) -> np.ndarray:
        """Apply to each row of ``X`` (flattened signals); returns flattened images."""
        X = np.atleast_2d(X)
        if self.kind is OperatorKind.INTEGRATION:
            return _integrate_rows(X, self.input_grid.volume / self.input_grid.n)
        if self.kind is OperatorKind.PERIODIC_CONVOLUTION:
            return _convolve_rows(X, self.params["kernel"].fourier(self.input_grid.n))
        return np.stack([self.apply(SampledFunction(self.input_grid, x)).flat for x in X])


def apply(op: ForwardOperator, f: SampledFunction) -> SampledFunction:
    return op.apply(f)


def write_sinogram_csv(path, sinogram: SampledFunction):
    """Row-major CSV: one row per ``t``, one column per ``theta``."""
    vals = np.asarray(sinogram.values)
    if vals.ndim != 2:
        raise ValueError("sinogram must be 2-D")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in vals:
            w.writerow([repr(float(v)) for v in row])
